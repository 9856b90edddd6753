// Command-line front end: lambda thresholds, denoising, sweeps, kernel and
// projector exports for periodic 1D signals (CSV) and 2D images (PGM).
//
// Exit codes: 0 success, 1 usage, 2 I/O or parse, 3 non-convergence.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvlam/oracle.hpp"
#include "tvlam/tvlam.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNoConvergence = 3;

struct LoadedInput {
    std::optional<tvlam::Signal1D> signal;
    std::optional<tvlam::Image2D> image;

    [[nodiscard]] bool is_1d() const { return signal.has_value(); }
};

// PGM by magic number, CSV otherwise. A CSV with a single column is a 1D
// signal; with several columns it is a row-major image.
LoadedInput load_input(const fs::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw tvlam::io::ParseError("cannot open " + path.string());
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    const bool is_pgm = probe.gcount() == 2 && magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5');
    probe.close();

    LoadedInput in;
    if (is_pgm) {
        in.image = tvlam::io::read_pgm(path);
        return in;
    }
    auto csv = tvlam::io::read_csv(path);
    if (csv.cols == 1)
        in.signal = tvlam::Signal1D(std::move(csv.values));
    else
        in.image = tvlam::Image2D(tvlam::GridShape{2, static_cast<int>(csv.rows),
                                                   static_cast<int>(csv.cols)},
                                  std::move(csv.values));
    return in;
}

std::ofstream open_output(const fs::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw tvlam::io::ParseError("cannot open " + path.string() + " for writing");
    return out;
}

fs::path derived_output(const fs::path& input, const std::string& suffix) {
    fs::path out = input;
    out.replace_extension();
    out += suffix;
    return out;
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw tvlam::io::ParseError("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw tvlam::io::ParseError(path.string() + ": " + e.what());
    }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& what) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw std::invalid_argument(what + ": unknown config key '" + key + "'");
    }
}

tvlam::ExactSolveConfig parse_exact_config(const json& j) {
    reject_unknown_keys(
        j, {"max_iterations", "feasibility_tolerance", "objective_tolerance", "step_scale"},
        "exact-solve config");
    tvlam::ExactSolveConfig cfg;
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.feasibility_tolerance = j.value("feasibility_tolerance", cfg.feasibility_tolerance);
    cfg.objective_tolerance = j.value("objective_tolerance", cfg.objective_tolerance);
    cfg.step_scale = j.value("step_scale", cfg.step_scale);
    return cfg;
}

tvlam::DenoiseConfig parse_denoise_config(const json& j) {
    reject_unknown_keys(j,
                        {"max_iterations", "tau", "sigma", "relative_change_tolerance",
                         "over_relaxation", "step_scale"},
                        "denoise config");
    tvlam::DenoiseConfig cfg;
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    cfg.relative_change_tolerance = j.value("relative_change_tolerance", cfg.relative_change_tolerance);
    cfg.over_relaxation = j.value("over_relaxation", cfg.over_relaxation);
    cfg.step_scale = j.value("step_scale", cfg.step_scale);
    return cfg;
}

class WallClock {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit_json(const json& j, const std::optional<fs::path>& copy_to) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (copy_to) {
        auto out = open_output(*copy_to);
        out << text;
    }
}

json scale_sidecar(const tvlam::io::PgmScale& scale) {
    return json{{"min", scale.min}, {"max", scale.max}, {"maxval", scale.maxval}};
}

void write_image_with_sidecar(const fs::path& path, const tvlam::Image2D& img,
                              json extra = json::object()) {
    auto out = open_output(path, true);
    const auto scale = tvlam::io::write_pgm(out, img);
    if (!out) throw tvlam::io::ParseError("write failed: " + path.string());
    json sidecar = scale_sidecar(scale);
    sidecar.update(extra);
    auto side = open_output(path.string() + ".json");
    side << sidecar.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// lambda

struct LambdaArgs {
    fs::path input;
    bool exact = false;
    bool componentwise = false;
    bool bisect = false;
    std::optional<fs::path> config;
    std::optional<fs::path> output;
    bool no_timing = false;
};

int cmd_lambda(const LambdaArgs& args) {
    tvlam::ExactSolveConfig cfg;
    if (args.config) cfg = parse_exact_config(load_json_file(*args.config));
    const LoadedInput in = load_input(args.input);

    WallClock clock;
    tvlam::LambdaReport report;
    if (in.is_1d()) {
        report = tvlam::lambda_max_1d(*in.signal);
    } else if (args.exact) {
        report = tvlam::lambda_max_exact_2d(*in.image, cfg);
    } else if (args.componentwise) {
        report = tvlam::lambda_bnd_2d_componentwise(*in.image);
    } else {
        report = tvlam::lambda_bnd_2d(*in.image);
    }

    json j{{"lambda", report.lambda},
           {"kind", tvlam::to_string(report.kind)},
           {"iterations", report.iterations},
           {"residual", report.residual},
           {"converged", report.converged}};

    if (args.bisect) {
        const double tol_rel = 1e-3;
        const double bracket = in.is_1d() ? 1.01 * std::max(report.lambda, 1e-300)
                                          : tvlam::lambda_bnd_2d(*in.image).lambda;
        double estimate = 0.0;
        if (bracket > 0.0) {
            estimate = in.is_1d()
                           ? tvlam::oracle::lambda_max_bisect(*in.signal, bracket, tol_rel)
                           : tvlam::oracle::lambda_max_bisect(*in.image, bracket, tol_rel);
        }
        j["bisect"] = json{{"lambda", estimate}, {"tol_rel", tol_rel}, {"bracket_hi", bracket}};
    }

    if (!args.no_timing) j["wall_clock_seconds"] = clock.seconds();
    emit_json(j, args.output);
    return report.converged ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseArgs {
    fs::path input;
    std::optional<double> lambda;
    std::optional<double> lambda_rel;
    std::optional<fs::path> config;
    std::optional<fs::path> output;
    bool no_timing = false;
};

int cmd_denoise(const DenoiseArgs& args) {
    tvlam::DenoiseConfig cfg;
    if (args.config) cfg = parse_denoise_config(load_json_file(*args.config));
    const LoadedInput in = load_input(args.input);

    double lambda = 0.0;
    if (args.lambda) {
        lambda = *args.lambda;
    } else {
        const double ref = in.is_1d() ? tvlam::lambda_max_1d(*in.signal).lambda
                                      : tvlam::lambda_bnd_2d(*in.image).lambda;
        lambda = *args.lambda_rel * ref;
    }

    WallClock clock;
    tvlam::SolverTrace trace;
    fs::path out_path;
    if (in.is_1d()) {
        auto result = tvlam::denoise(*in.signal, lambda, cfg);
        trace = result.trace;
        out_path = args.output.value_or(derived_output(args.input, ".denoised.csv"));
        auto out = open_output(out_path);
        tvlam::io::write_csv(out, result.x);
        if (!out) throw tvlam::io::ParseError("write failed: " + out_path.string());
    } else {
        auto result = tvlam::denoise(*in.image, lambda, cfg);
        trace = result.trace;
        out_path = args.output.value_or(derived_output(args.input, ".denoised.pgm"));
        write_image_with_sidecar(out_path, result.x);
    }

    json j{{"lambda", lambda},
           {"iterations", trace.iterations},
           {"final_change", trace.final_change},
           {"grad_inf_norm", trace.grad_inf_norm},
           {"converged", trace.converged},
           {"output", out_path.string()}};
    if (!args.no_timing) j["wall_clock_seconds"] = clock.seconds();
    std::cout << j.dump(2) << "\n";
    return trace.converged ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    fs::path input;
    std::string grid = "log";
    long points = 10;
    double max_rel = 1.0;
    std::optional<fs::path> config;
    std::optional<fs::path> output;
};

std::vector<double> make_lambda_grid(const std::string& kind, long points, double top) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (long i = 0; i < points; ++i) {
        if (kind == "linear") {
            grid[static_cast<std::size_t>(i)] = top * static_cast<double>(i + 1) / static_cast<double>(points);
        } else {
            // Three decades ending at top.
            const double t = points == 1 ? 0.0
                                         : static_cast<double>(points - 1 - i) / static_cast<double>(points - 1);
            grid[static_cast<std::size_t>(i)] = top * std::pow(10.0, -3.0 * t);
        }
    }
    return grid;
}

int cmd_sweep(const SweepArgs& args) {
    tvlam::DenoiseConfig cfg;
    if (args.config) cfg = parse_denoise_config(load_json_file(*args.config));
    const LoadedInput in = load_input(args.input);

    const double ref = in.is_1d() ? tvlam::lambda_max_1d(*in.signal).lambda
                                  : tvlam::lambda_bnd_2d(*in.image).lambda;
    const double top = args.max_rel * ref;
    if (top <= 0.0)
        throw tvlam::io::ParseError(args.input.string() + ": constant input, lambda grid is empty");

    const auto grid = make_lambda_grid(args.grid, args.points, top);
    const auto result = in.is_1d() ? tvlam::sweep(*in.signal, grid, cfg)
                                   : tvlam::sweep(*in.image, grid, cfg);

    std::ostringstream csv;
    csv << "lambda,grad_inf_norm,deviation_from_mean,iterations\n";
    bool all_converged = true;
    for (const auto& row : result.rows) {
        csv << tvlam::io::format_double(row.lambda) << ',' << tvlam::io::format_double(row.grad_inf_norm)
            << ',' << tvlam::io::format_double(row.deviation_from_mean) << ',' << row.iterations << "\n";
        if (!row.converged) {
            csv << "# not converged: lambda=" << tvlam::io::format_double(row.lambda) << "\n";
            all_converged = false;
        }
    }
    if (args.output) {
        auto out = open_output(*args.output);
        out << csv.str();
        if (!out) throw tvlam::io::ParseError("write failed: " + args.output->string());
    } else {
        std::cout << csv.str();
    }
    return all_converged ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------------------
// kernels

struct KernelsArgs {
    std::optional<int> n;
    std::optional<int> rows;
    std::optional<int> cols;
    std::string format = "csv";
    double power = 1.0;
    bool frequency = false;
    std::string prefix = "kernel";
};

tvlam::Image2D power_scaled(const tvlam::Image2D& img, double power) {
    std::vector<double> v(img.values().begin(), img.values().end());
    for (auto& x : v) x = std::copysign(std::pow(std::abs(x), power), x);
    return tvlam::Image2D(img.shape(), std::move(v));
}

int cmd_kernels(const KernelsArgs& args) {
    json j{{"files", json::array()}};
    const auto record = [&](const fs::path& p) { j["files"].push_back(p.string()); };

    if (args.n) {
        const int n = *args.n;
        const tvlam::GridShape s{1, n, 1};
        const auto piv = tvlam::kernel_pinv_1d(tvlam::kernel_backward_diff(n));
        const auto spatial = tvlam::dft_inverse_real(s, piv.entries);
        const fs::path path = args.prefix + ".csv";
        auto out = open_output(path);
        tvlam::io::write_csv(out, n, 1, spatial);
        record(path);
        if (args.frequency) {
            const fs::path fpath = args.prefix + "_freq.csv";
            auto fout = open_output(fpath);
            tvlam::io::write_spectrum_csv(fout, piv.entries);
            record(fpath);
        }
        j["shape"] = json{{"d", 1}, {"n1", n}, {"n2", 1}};
    } else {
        const int n1 = *args.rows, n2 = *args.cols;
        const tvlam::GridShape s{2, n1, n2};
        const auto [piv_up, piv_left] =
            tvlam::kernel_pinv_2d(tvlam::kernel_backward_diff_vertical(n1, n2),
                                  tvlam::kernel_backward_diff_horizontal(n1, n2));
        const auto emit = [&](const char* name, const tvlam::SpectralKernel2D& k) {
            const tvlam::Image2D spatial(s, tvlam::dft_inverse_real(s, k.entries));
            if (args.format == "pgm") {
                const fs::path path = args.prefix + std::string("_") + name + ".pgm";
                write_image_with_sidecar(path, power_scaled(spatial, args.power),
                                         json{{"power", args.power}});
                record(path);
            } else {
                const fs::path path = args.prefix + std::string("_") + name + ".csv";
                auto out = open_output(path);
                tvlam::io::write_csv(out, spatial);
                record(path);
            }
            if (args.frequency) {
                const fs::path fpath = args.prefix + std::string("_") + name + "_freq.csv";
                auto fout = open_output(fpath);
                tvlam::io::write_spectrum_csv(fout, k.entries);
                record(fpath);
            }
        };
        emit("vertical", piv_up);
        emit("horizontal", piv_left);
        j["shape"] = json{{"d", 2}, {"n1", n1}, {"n2", n2}};
        if (args.format == "pgm") j["power"] = args.power;
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// project

struct ProjectArgs {
    fs::path input;
    std::optional<fs::path> output;
};

int cmd_project(const ProjectArgs& args) {
    const LoadedInput in = load_input(args.input);
    json j;
    fs::path out_path;
    if (in.is_1d()) {
        const auto projected = tvlam::project_zero_mean(*in.signal);
        out_path = args.output.value_or(derived_output(args.input, ".projected.csv"));
        auto out = open_output(out_path);
        tvlam::io::write_csv(out, projected);
        if (!out) throw tvlam::io::ParseError("write failed: " + out_path.string());
        j["input_mean"] = tvlam::mean(*in.signal);
        j["output_min"] = *std::min_element(projected.values().begin(), projected.values().end());
        j["output_max"] = *std::max_element(projected.values().begin(), projected.values().end());
    } else {
        const auto projected = tvlam::project_zero_mean(*in.image);
        out_path = args.output.value_or(derived_output(args.input, ".projected.pgm"));
        write_image_with_sidecar(out_path, projected);
        j["input_mean"] = tvlam::mean(*in.image);
        j["output_min"] = *std::min_element(projected.values().begin(), projected.values().end());
        j["output_max"] = *std::max_element(projected.values().begin(), projected.values().end());
    }
    j["output"] = out_path.string();
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int validate_thread_cap() {
    const char* env = std::getenv("TVLAM_THREADS");
    if (env == nullptr) return kExitOk;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
        std::cerr << "error: TVLAM_THREADS must be a positive integer, got '" << env << "'\n";
        return kExitUsage;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold, denoising and spectral tools for periodic anisotropic TV"};
    app.require_subcommand(1);

    LambdaArgs lambda_args;
    auto* lam = app.add_subcommand(
        "lambda", "Smallest lambda flattening the TV-denoised input (exact in 1D, bound or "
                  "exact solve in 2D)");
    lam->add_option("input", lambda_args.input, "CSV signal or PGM image")->required();
    auto* exact_flag = lam->add_flag("--exact", lambda_args.exact, "solve the 2D problem exactly");
    lam->add_flag("--componentwise", lambda_args.componentwise, "tightened per-direction 2D bound")
        ->excludes(exact_flag);
    lam->add_flag("--bisect", lambda_args.bisect, "cross-check by bisection over the denoiser");
    lam->add_option("--config", lambda_args.config, "JSON file with exact-solver settings");
    lam->add_option("-o,--output", lambda_args.output, "also write the JSON report here");
    lam->add_flag("--no-timing", lambda_args.no_timing, "omit wall-clock fields");

    DenoiseArgs denoise_args;
    auto* den = app.add_subcommand("denoise", "Anisotropic TV denoising at a fixed lambda");
    den->add_option("input", denoise_args.input, "CSV signal or PGM image")->required();
    auto* lam_opt = den->add_option("--lambda", denoise_args.lambda, "regularization strength")
                        ->check(CLI::NonNegativeNumber);
    den->add_option("--lambda-rel", denoise_args.lambda_rel,
                    "lambda as a fraction of the input's upper bound")
        ->check(CLI::NonNegativeNumber)
        ->excludes(lam_opt);
    den->add_option("--config", denoise_args.config, "JSON file with denoiser settings");
    den->add_option("-o,--output", denoise_args.output, "output path (.csv for 1D, .pgm for 2D)");
    den->add_flag("--no-timing", denoise_args.no_timing, "omit wall-clock fields");

    SweepArgs sweep_args;
    auto* swp = app.add_subcommand("sweep", "Denoise over a lambda grid; CSV of gradient norms");
    swp->add_option("input", sweep_args.input, "CSV signal or PGM image")->required();
    swp->add_option("--grid", sweep_args.grid, "grid spacing")
        ->check(CLI::IsMember({"log", "linear"}))
        ->capture_default_str();
    swp->add_option("--points", sweep_args.points, "number of lambda values")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    swp->add_option("--max", sweep_args.max_rel, "top of the grid relative to the upper bound")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    swp->add_option("--config", sweep_args.config, "JSON file with denoiser settings");
    swp->add_option("-o,--output", sweep_args.output, "write CSV here instead of stdout");

    KernelsArgs kernels_args;
    auto* ker = app.add_subcommand("kernels", "Export spatial pseudo-inverse convolution kernels");
    auto* n_opt = ker->add_option("--n", kernels_args.n, "1D length")->check(CLI::PositiveNumber);
    auto* rows_opt = ker->add_option("--rows", kernels_args.rows, "2D rows")
                         ->check(CLI::PositiveNumber)
                         ->excludes(n_opt);
    auto* cols_opt = ker->add_option("--cols", kernels_args.cols, "2D columns")
                         ->check(CLI::PositiveNumber)
                         ->excludes(n_opt);
    rows_opt->needs(cols_opt);
    cols_opt->needs(rows_opt);
    ker->add_option("--format", kernels_args.format, "2D output format")
        ->check(CLI::IsMember({"csv", "pgm"}))
        ->capture_default_str();
    ker->add_option("--power", kernels_args.power, "power-scale exponent for PGM display")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    ker->add_flag("--frequency", kernels_args.frequency, "also export frequency-domain kernels");
    ker->add_option("-o,--prefix", kernels_args.prefix, "output file prefix")->capture_default_str();

    ProjectArgs project_args;
    auto* prj = app.add_subcommand("project", "Zero-mean projection div(div_pinv(input))");
    prj->add_option("input", project_args.input, "CSV signal or PGM image")->required();
    prj->add_option("-o,--output", project_args.output, "output path (.csv for 1D, .pgm for 2D)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (const int rc = validate_thread_cap(); rc != kExitOk) return rc;

    try {
        if (*lam) return cmd_lambda(lambda_args);
        if (*den) {
            if (!denoise_args.lambda && !denoise_args.lambda_rel)
                throw std::invalid_argument("denoise: one of --lambda/--lambda-rel is required");
            return cmd_denoise(denoise_args);
        }
        if (*swp) return cmd_sweep(sweep_args);
        if (*ker) {
            if (!kernels_args.n && !kernels_args.rows)
                throw std::invalid_argument("kernels: one of --n or --rows/--cols is required");
            return cmd_kernels(kernels_args);
        }
        if (*prj) return cmd_project(project_args);
    } catch (const tvlam::io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
