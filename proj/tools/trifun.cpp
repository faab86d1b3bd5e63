#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <complex>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "trifun/funm.hpp"
#include "trifun/genlog.hpp"
#include "trifun/io.hpp"
#include "trifun/oracles.hpp"
#include "trifun/random.hpp"
#include "trifun/theta.hpp"
#include "trifun/triangular.hpp"

namespace {

using namespace trifun;

int g_digits = 17;  // set once in main from TRIFUN_FLOAT_DIGITS

// --------------------------------------------------------------- timing

/// Named phase timer. Timing is opt-in because reports promise to be
/// byte-identical across identical invocations, and wall clock readings
/// are not; without --time every phase reports zero nanoseconds.
struct Phases {
    bool enabled = false;
    std::vector<std::pair<std::string, long long>> entries;

    template <typename F>
    auto run(const std::string& name, F&& f) -> decltype(f()) {
        if (!enabled) {
            entries.emplace_back(name, 0LL);
            return f();
        }
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            entries.emplace_back(name, elapsed(start));
        } else {
            auto result = f();
            entries.emplace_back(name, elapsed(start));
            return result;
        }
    }

    static long long elapsed(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }

    io::Json to_json() const {
        io::Json arr = io::Json::array();
        for (const auto& [name, nanos] : entries) {
            io::Json p = io::Json::object();
            p["name"] = name;
            p["nanos"] = nanos;
            arr.push_back(std::move(p));
        }
        return arr;
    }
};

// ----------------------------------------------------------- error JSON

void emit_error(int code, const std::string& type, const std::string& message,
                const std::vector<std::pair<std::string, io::Json>>& details = {}) {
    io::Json body = io::Json::object();
    body["type"] = type;
    body["message"] = message;
    body["exit_code"] = code;
    for (const auto& [key, value] : details) body[key] = value;
    io::Json err = io::Json::object();
    err["error"] = std::move(body);
    std::cerr << err.dump(g_digits) << "\n";
}

/// Maps every library error onto the documented exit codes and renders it
/// as machine-readable JSON on stderr. Indices in the details are 0-based,
/// matching the message text; only theta and eta table rows are 1-based.
template <typename F>
int run_guarded(F&& body) {
    try {
        return body();
    } catch (const io::ParseError& e) {
        emit_error(2, "ParseError", e.what());
        return 2;
    } catch (const NotTriangular& e) {
        emit_error(2, "NotTriangular", e.what(),
                   {{"row", e.row()}, {"col", e.col()}, {"magnitude", e.magnitude()}});
        return 2;
    } catch (const DimensionMismatch& e) {
        emit_error(2, "DimensionMismatch", e.what());
        return 2;
    } catch (const DegenerateSpectrum& e) {
        emit_error(3, "DegenerateSpectrum", e.what(),
                   {{"first", e.first()}, {"second", e.second()}, {"gap", e.gap()}});
        return 3;
    } catch (const NonPositiveDiagonal& e) {
        emit_error(6, "NonPositiveDiagonal", e.what(),
                   {{"index", e.index()}, {"value", e.value()}});
        return 6;
    } catch (const DomainViolation& e) {
        std::vector<std::pair<std::string, io::Json>> details{{"function", e.function()}};
        if (e.index() >= 0) {
            details.emplace_back("index", e.index());
            details.emplace_back("eigenvalue", io::complex_json(e.eigenvalue()));
        }
        emit_error(4, "DomainViolation", e.what(), details);
        return 4;
    } catch (const EigenvalueOnCut& e) {
        emit_error(4, "EigenvalueOnCut", e.what(), {{"index", e.index()}, {"value", e.value()}});
        return 4;
    } catch (const SingularResolvent& e) {
        emit_error(4, "SingularResolvent", e.what(), {{"node", e.node()}, {"index", e.index()}});
        return 4;
    } catch (const SpectralRadiusTooLarge& e) {
        emit_error(4, "SpectralRadiusTooLarge", e.what(), {{"bound", e.bound()}});
        return 4;
    } catch (const NotConverged& e) {
        emit_error(4, "NotConverged", e.what(), {{"terms", e.terms()}});
        return 4;
    } catch (const Error& e) {
        emit_error(1, "Error", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(1, "Internal", e.what());
        return 1;
    }
}

// ---------------------------------------------------------------- input

struct InputOptions {
    std::string path;
    std::string format = "auto";
    bool lower = false;
    bool upper = false;
    bool dense = false;
    double zero_tol = 0.0;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("input", in.path, "matrix file, or - for stdin")->required();
    cmd->add_option("--format", in.format, "input format (auto picks json unless the path ends in .csv)")
        ->check(CLI::IsMember({"auto", "json", "csv"}))
        ->capture_default_str();
    auto* lower = cmd->add_flag("--lower", in.lower, "csv grid holds a lower triangular matrix");
    auto* upper = cmd->add_flag("--upper", in.upper, "csv grid holds an upper triangular matrix");
    auto* dense = cmd->add_flag("--dense", in.dense, "csv grid is dense; detect the clean triangle");
    lower->excludes(upper)->excludes(dense);
    upper->excludes(dense);
    cmd->add_option("--zero-tol", in.zero_tol,
                    "largest modulus still treated as zero on the wrong side of the diagonal")
        ->capture_default_str();
}

io::LoadedMatrix load_input(const InputOptions& in) {
    const std::string text = io::read_file_or_stdin(in.path);
    const io::FileFormat format = io::format_for_path(in.path, in.format == "auto" ? "" : in.format);
    io::OrientationHint hint = io::OrientationHint::Auto;
    if (in.lower) hint = io::OrientationHint::Lower;
    if (in.upper) hint = io::OrientationHint::Upper;
    return io::load_matrix(text, format, hint, in.zero_tol);
}

io::Json input_json(const InputOptions& in, const io::LoadedMatrix& m) {
    const io::FileFormat format = io::format_for_path(in.path, in.format == "auto" ? "" : in.format);
    io::Json j = io::Json::object();
    j["path"] = in.path;
    j["format"] = format == io::FileFormat::Csv ? "csv" : "json";
    j["digest"] = m.digest;
    j["dim"] = m.dim;
    j["orientation"] = m.orientation;
    j["transposed"] = m.transposed;
    j["complex"] = m.complex_entries;
    return j;
}

io::Json report_base(const char* command, const InputOptions& in, const io::LoadedMatrix& loaded) {
    io::Json report = io::Json::object();
    report["tool"] = "trifun";
    report["command"] = command;
    report["input"] = input_json(in, loaded);
    return report;
}

void print_report(const io::Json& report) { std::cout << report.dump(g_digits) << "\n"; }

// -------------------------------------------------------- serialization

io::Json value_json(double v) { return io::Json(v); }
io::Json value_json(std::complex<double> v) { return io::complex_json(v); }

template <typename Scalar>
io::Json spectrum_json(const SpectrumInfo<Scalar>& info) {
    io::Json diag = io::Json::array();
    for (const Scalar& v : info.diagonal) diag.push_back(value_json(v));
    io::Json j = io::Json::object();
    j["diagonal"] = std::move(diag);
    j["min_separation"] = info.min_separation;
    j["scale"] = info.scale;
    j["relative_separation"] = info.relative_separation;
    if (info.first >= 0) {
        io::Json pair = io::Json::array();
        pair.push_back(info.first);
        pair.push_back(info.second);
        j["closest_pair"] = std::move(pair);
    } else {
        j["closest_pair"] = nullptr;
    }
    return j;
}

/// Table rows are 1-based quadruples [n, k, m, value], ascending in
/// (n, k, m), covering m <= k <= n.
template <typename Scalar>
io::Json table_json(const ThetaTable<Scalar>& table) {
    io::Json rows = io::Json::array();
    for (int n = 0; n < table.dim(); ++n)
        for (int k = 0; k <= n; ++k)
            for (int m = 0; m <= k; ++m) {
                io::Json row = io::Json::array();
                row.push_back(n + 1);
                row.push_back(k + 1);
                row.push_back(m + 1);
                row.push_back(value_json(table(n, k, m)));
                rows.push_back(std::move(row));
            }
    return rows;
}

io::Json identities_json(const IdentityReport& r) {
    io::Json j = io::Json::object();
    j["spectral_decomposition"] = r.spectral_decomposition;
    j["resolution_of_identity"] = r.resolution_of_identity;
    j["projector_orthogonality"] = r.projector_orthogonality;
    j["eigen_relation"] = r.eigen_relation;
    j["max"] = r.max();
    j["tol"] = r.tol;
    j["within_tol"] = r.within_tol();
    return j;
}

io::Json markov_json(const MarkovReport& r) {
    io::Json j = io::Json::object();
    j["min_entry"] = r.min_entry;
    j["max_row_sum_error"] = r.max_row_sum_error;
    j["min_diagonal"] = r.min_diagonal;
    j["max_diagonal"] = r.max_diagonal;
    j["tol"] = r.tol;
    j["markov"] = r.markov;
    return j;
}

template <typename Scalar>
io::Json sums_json(const std::vector<Scalar>& sums) {
    io::Json arr = io::Json::array();
    for (const Scalar& v : sums) arr.push_back(value_json(v));
    return arr;
}

// ------------------------------------------------------ scalar function

struct FunctionOptions {
    std::string name;
    double t = 1.0;
    double alpha = 1.0;
    std::vector<double> coefficients;
};

ScalarFunction make_function(const FunctionOptions& fo) {
    if (fo.name == "exp") return Exp{fo.t};
    if (fo.name == "log") return PrincipalLog{};
    if (fo.name == "pow") return Power{fo.alpha};
    if (fo.name == "inv") return Inverse{};
    return Polynomial{fo.coefficients};
}

void echo_function(io::Json& params, const FunctionOptions& fo) {
    params["function"] = fo.name;
    if (fo.name == "exp") params["t"] = fo.t;
    if (fo.name == "pow") params["alpha"] = fo.alpha;
    if (fo.name == "poly") {
        io::Json cs = io::Json::array();
        for (double c : fo.coefficients) cs.push_back(c);
        params["coefficients"] = std::move(cs);
    }
}

/// Independent reference for --oracle: series, quadrature or plain dense
/// algebra, never the coefficient table.
template <typename Scalar>
std::pair<std::string, DenseMatrix<Scalar>> oracle_apply(const LowerTriangular<Scalar>& b,
                                                         const ScalarFunction& f) {
    const DenseMatrix<Scalar> dense = dense_from(b);
    const Eigen::Index d = dense.rows();
    const DenseMatrix<Scalar> identity = DenseMatrix<Scalar>::Identity(d, d);

    if (const Exp* e = std::get_if<Exp>(&f)) {
        const DenseMatrix<Scalar> scaled = dense * Scalar(e->t);
        return {"exp_series", exp_series(scaled)};
    }
    if (std::get_if<PrincipalLog>(&f)) return {"log_integral", log_integral(dense)};
    if (const Power* p = std::get_if<Power>(&f)) {
        if (detail::is_nonnegative_integer(p->alpha)) {
            DenseMatrix<Scalar> acc = identity;
            DenseMatrix<Scalar> base = dense;
            auto e = static_cast<unsigned long long>(p->alpha);
            while (e != 0) {
                if (e & 1) acc = dense_multiply(acc, base);
                e >>= 1;
                if (e != 0) base = dense_multiply(base, base);
            }
            return {"dense_power", acc};
        }
        const DenseMatrix<Scalar> scaled = log_integral(dense) * Scalar(p->alpha);
        return {"exp_series(alpha log_integral)", exp_series(scaled)};
    }
    if (std::get_if<Inverse>(&f)) {
        // the packed route has already rejected singular input
        return {"dense_inverse", dense.partialPivLu().solve(identity)};
    }
    const Polynomial& poly = std::get<Polynomial>(f);
    DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(d, d);
    for (auto it = poly.coefficients.rbegin(); it != poly.coefficients.rend(); ++it) {
        acc = dense_multiply(acc, dense);
        acc += Scalar(*it) * identity;
    }
    return {"dense_horner", acc};
}

// ------------------------------------------------------------- commands

struct ThetaOptions {
    InputOptions in;
    double sep_tol = 1e-8;
    double check_tol = 1e-8;
    bool time = false;
};

int cmd_theta(const ThetaOptions& o) {
    Phases phases;
    phases.enabled = o.time;
    const io::LoadedMatrix loaded = phases.run("load", [&] { return load_input(o.in); });

    return std::visit(
        [&](const auto& b) -> int {
            const auto info =
                phases.run("validate", [&] { return validate_simple_spectrum(b, o.sep_tol); });
            const auto table = phases.run("theta", [&] { return compute_theta(b, info); });
            const IdentityReport identities =
                phases.run("identities", [&] { return check_identities(b, table, o.check_tol); });

            io::Json report = report_base("theta", o.in, loaded);
            io::Json params = io::Json::object();
            params["sep_tol"] = o.sep_tol;
            params["check_tol"] = o.check_tol;
            report["parameters"] = std::move(params);
            report["spectrum"] = spectrum_json(info);
            report["phases"] = phases.to_json();
            io::Json results = io::Json::object();
            results["table"] = table_json(table);
            report["results"] = std::move(results);
            io::Json checks = io::Json::object();
            checks["identities"] = identities_json(identities);
            checks["conditioning"] = conditioning_indicator(table);
            report["checks"] = std::move(checks);
            print_report(report);
            return 0;
        },
        loaded.matrix);
}

struct ApplyOptions {
    InputOptions in;
    FunctionOptions fn;
    std::string route = "theta";
    bool oracle = false;
    double sep_tol = 1e-8;
    double check_tol = 1e-8;
    bool time = false;
};

int cmd_apply(const ApplyOptions& o) {
    if (o.fn.name == "poly" && o.fn.coefficients.empty())
        throw io::ParseError("poly needs --coeffs with at least one coefficient");
    const ScalarFunction f = make_function(o.fn);

    Phases phases;
    phases.enabled = o.time;
    const io::LoadedMatrix loaded = phases.run("load", [&] { return load_input(o.in); });

    return std::visit(
        [&](const auto& b) -> int {
            using Matrix = std::decay_t<decltype(b)>;
            using Scalar = typename Matrix::value_type;
            const auto info =
                phases.run("validate", [&] { return validate_simple_spectrum(b, o.sep_tol); });

            ThetaTable<Scalar> table(b.dim());
            Matrix result(b.dim());
            if (o.route == "parlett") {
                table = phases.run("parlett", [&] { return parlett_coefficients(b, info); });
                result = phases.run("apply", [&] { return parlett_apply(b, f, o.sep_tol); });
            } else {
                table = phases.run("theta", [&] { return compute_theta(b, info); });
                result = phases.run("apply", [&] { return apply(b, table, f); });
            }
            const IdentityReport identities =
                phases.run("identities", [&] { return check_identities(b, table, o.check_tol); });

            std::string oracle_name;
            double oracle_residual = 0.0;
            if (o.oracle) {
                auto [name, reference] = phases.run("oracle", [&] { return oracle_apply(b, f); });
                const DenseMatrix<Scalar> diff = dense_from(result) - reference;
                oracle_name = name;
                oracle_residual = max_abs(diff);
            }

            io::Json report = report_base("apply", o.in, loaded);
            io::Json params = io::Json::object();
            echo_function(params, o.fn);
            params["route"] = o.route;
            params["oracle"] = o.oracle;
            params["sep_tol"] = o.sep_tol;
            params["check_tol"] = o.check_tol;
            report["parameters"] = std::move(params);
            report["spectrum"] = spectrum_json(info);
            report["phases"] = phases.to_json();
            io::Json results = io::Json::object();
            results["matrix"] = io::matrix_file_json(result, loaded.transposed);
            if (o.oracle) {
                io::Json oracle = io::Json::object();
                oracle["name"] = oracle_name;
                oracle["residual"] = oracle_residual;
                oracle["check_tol"] = o.check_tol;
                results["oracle"] = std::move(oracle);
            }
            report["results"] = std::move(results);
            io::Json checks = io::Json::object();
            checks["identities"] = identities_json(identities);
            checks["conditioning"] = conditioning_indicator(table);
            report["checks"] = std::move(checks);
            print_report(report);

            if (o.oracle && oracle_residual > o.check_tol) {
                emit_error(5, "OracleDisagreement",
                           "route and " + oracle_name + " differ by " +
                               io::format_float(oracle_residual, 6) + ", above the check tolerance",
                           {{"residual", oracle_residual},
                            {"check_tol", o.check_tol},
                            {"oracle", oracle_name}});
                return 5;
            }
            return 0;
        },
        loaded.matrix);
}

struct GeneratorOptions {
    InputOptions in;
    double t = 1.0;
    double sep_tol = 1e-8;
    double markov_tol = 1e-12;
    double check_tol = 1e-8;
    bool time = false;
};

int cmd_generator(const GeneratorOptions& o) {
    Phases phases;
    phases.enabled = o.time;
    const io::LoadedMatrix loaded = phases.run("load", [&] { return load_input(o.in); });
    if (loaded.complex_entries)
        throw DomainViolation("generator", "generator extraction needs a real snapshot");
    const auto& p = std::get<LowerTriangular<double>>(loaded.matrix);

    const SemigroupSample sample{p, o.t};
    const GeneratorResult result =
        phases.run("extract", [&] { return extract_generator(sample, o.sep_tol, o.markov_tol); });
    const VerifyReport verify = phases.run(
        "verify", [&] { return verify_generator(result, sample, default_verify_tol(sample)); });
    const IdentityReport identities =
        phases.run("identities", [&] { return check_identities(p, result.eta, o.check_tol); });
    const MarkovReport markov = check_markov(p, o.markov_tol);

    io::Json report = report_base("generator", o.in, loaded);
    io::Json params = io::Json::object();
    params["t"] = o.t;
    params["sep_tol"] = o.sep_tol;
    params["markov_tol"] = o.markov_tol;
    params["check_tol"] = o.check_tol;
    report["parameters"] = std::move(params);
    report["spectrum"] = spectrum_json(result.snapshot_spectrum);
    report["phases"] = phases.to_json();
    io::Json results = io::Json::object();
    results["generator"] = io::matrix_file_json(result.generator, loaded.transposed);
    results["eta_table"] = table_json(result.eta);
    results["row_sums_of_generator"] = sums_json(result.diagnostics.row_sums_of_b);
    io::Json verify_json = io::Json::object();
    verify_json["residual"] = verify.residual;
    verify_json["tol"] = verify.tol;
    verify_json["ok"] = verify.ok;
    results["verify"] = std::move(verify_json);
    report["results"] = std::move(results);
    io::Json checks = io::Json::object();
    checks["markov_input"] = markov_json(markov);
    checks["rate_matrix"] = result.diagnostics.rate_matrix;
    checks["identities"] = identities_json(identities);
    checks["conditioning"] = result.diagnostics.conditioning;
    report["checks"] = std::move(checks);
    print_report(report);
    return 0;
}

struct SemigroupOptions {
    InputOptions in;
    std::vector<double> times;
    double sep_tol = 1e-8;
    double check_tol = 1e-8;
    bool parallel = false;
    bool time = false;
};

int cmd_semigroup(const SemigroupOptions& o) {
    Phases phases;
    phases.enabled = o.time;
    const io::LoadedMatrix loaded = phases.run("load", [&] { return load_input(o.in); });

    return std::visit(
        [&](const auto& b) -> int {
            using Matrix = std::decay_t<decltype(b)>;
            const auto info =
                phases.run("validate", [&] { return validate_simple_spectrum(b, o.sep_tol); });
            // one table serves every time; this is the single theta phase
            const auto table = phases.run("theta", [&] { return compute_theta(b, info); });

            std::vector<Matrix> snapshots(o.times.size(), Matrix(b.dim()));
            phases.run("evaluate", [&] {
                auto evaluate_at = [&](std::size_t i) {
                    snapshots[i] = apply(b, table, Exp{o.times[i]});
                };
                if (o.parallel && o.times.size() > 1) {
                    std::atomic<std::size_t> next{0};
                    const std::size_t workers =
                        std::min<std::size_t>(std::max(std::thread::hardware_concurrency(), 1u),
                                              o.times.size());
                    std::vector<std::thread> pool;
                    pool.reserve(workers);
                    for (std::size_t w = 0; w < workers; ++w)
                        pool.emplace_back([&] {
                            for (std::size_t i = next.fetch_add(1); i < o.times.size();
                                 i = next.fetch_add(1))
                                evaluate_at(i);
                        });
                    for (std::thread& th : pool) th.join();
                } else {
                    for (std::size_t i = 0; i < o.times.size(); ++i) evaluate_at(i);
                }
            });
            const IdentityReport identities =
                phases.run("identities", [&] { return check_identities(b, table, o.check_tol); });

            // semigroup law spot checks for every pair whose sum is in the list
            io::Json law = io::Json::array();
            phases.run("checks", [&] {
                for (std::size_t i = 0; i < o.times.size(); ++i)
                    for (std::size_t j = i; j < o.times.size(); ++j) {
                        std::size_t k = o.times.size();
                        for (std::size_t c = 0; c < o.times.size(); ++c)
                            if (std::abs(o.times[i] + o.times[j] - o.times[c]) <= 1e-12) {
                                k = c;
                                break;
                            }
                        if (k == o.times.size()) continue;
                        const DenseMatrix<typename Matrix::value_type> product = dense_multiply(
                            dense_from(snapshots[i]), dense_from(snapshots[j]));
                        const DenseMatrix<typename Matrix::value_type> diff =
                            product - dense_from(snapshots[k]);
                        io::Json entry = io::Json::object();
                        entry["t"] = o.times[i];
                        entry["s"] = o.times[j];
                        entry["sum"] = o.times[k];
                        entry["residual"] = max_abs(diff);
                        law.push_back(std::move(entry));
                    }
            });

            io::Json report = report_base("semigroup", o.in, loaded);
            io::Json params = io::Json::object();
            io::Json times = io::Json::array();
            for (double t : o.times) times.push_back(t);
            params["times"] = std::move(times);
            params["sep_tol"] = o.sep_tol;
            params["check_tol"] = o.check_tol;
            params["parallel"] = o.parallel;
            report["parameters"] = std::move(params);
            report["spectrum"] = spectrum_json(info);
            report["phases"] = phases.to_json();
            io::Json results = io::Json::object();
            io::Json matrices = io::Json::array();
            for (const Matrix& m : snapshots)
                matrices.push_back(io::matrix_file_json(m, loaded.transposed));
            results["matrices"] = std::move(matrices);
            results["semigroup_checks"] = std::move(law);
            report["results"] = std::move(results);
            io::Json checks = io::Json::object();
            checks["identities"] = identities_json(identities);
            checks["conditioning"] = conditioning_indicator(table);
            report["checks"] = std::move(checks);
            print_report(report);
            return 0;
        },
        loaded.matrix);
}

struct CheckOptions {
    InputOptions in;
    double sep_tol = 1e-8;
    double check_tol = 1e-8;
    double markov_tol = 1e-12;
    bool time = false;
};

int cmd_check(const CheckOptions& o) {
    Phases phases;
    phases.enabled = o.time;
    const io::LoadedMatrix loaded = phases.run("load", [&] { return load_input(o.in); });

    return std::visit(
        [&](const auto& b) -> int {
            using Scalar = typename std::decay_t<decltype(b)>::value_type;
            const auto info =
                phases.run("validate", [&] { return validate_simple_spectrum(b, o.sep_tol); });
            const auto table = phases.run("theta", [&] { return compute_theta(b, info); });
            const IdentityReport identities =
                phases.run("identities", [&] { return check_identities(b, table, o.check_tol); });

            bool has_markov = false;
            MarkovReport markov;
            if constexpr (std::is_same_v<Scalar, double>) {
                markov = phases.run("markov", [&] { return check_markov(b, o.markov_tol); });
                has_markov = true;
            }

            io::Json report = report_base("check", o.in, loaded);
            io::Json params = io::Json::object();
            params["sep_tol"] = o.sep_tol;
            params["check_tol"] = o.check_tol;
            params["markov_tol"] = o.markov_tol;
            report["parameters"] = std::move(params);
            report["spectrum"] = spectrum_json(info);
            report["phases"] = phases.to_json();
            io::Json results = io::Json::object();
            results["identities_ok"] = identities.within_tol();
            results["markov"] = has_markov ? io::Json(markov.markov) : io::Json(nullptr);
            report["results"] = std::move(results);
            io::Json checks = io::Json::object();
            checks["identities"] = identities_json(identities);
            checks["markov"] = has_markov ? markov_json(markov) : io::Json(nullptr);
            checks["conditioning"] = conditioning_indicator(table);
            report["checks"] = std::move(checks);
            print_report(report);

            if (!identities.within_tol()) {
                emit_error(5, "IdentityCheckFailed",
                           "coefficient table violates its identities by " +
                               io::format_float(identities.max(), 6) +
                               ", above the check tolerance",
                           {{"residual", identities.max()}, {"check_tol", o.check_tol}});
                return 5;
            }
            return 0;
        },
        loaded.matrix);
}

struct BenchOptions {
    std::vector<int> dims;
    std::vector<double> gaps;
    std::uint64_t seed = 0;
    int instances = 1;
    bool parallel = false;
    bool time = false;
};

int cmd_bench(const BenchOptions& o) {
    struct Combo {
        int d;
        double gap;
        int instance;
    };
    std::vector<Combo> combos;
    for (int d : o.dims)
        for (double gap : o.gaps)
            for (int i = 0; i < o.instances; ++i) combos.push_back({d, gap, i});

    struct Row {
        int d = 0;
        double gap = 0.0;
        long long nanos[3] = {0, 0, 0};
        double residual = 0.0;
        double conditioning = 0.0;
    };
    std::vector<Row> rows(combos.size());

    auto run_combo = [&](std::size_t idx) {
        const Combo& c = combos[idx];
        // every combo owns a stream, so results do not depend on scheduling
        std::uint64_t s = o.seed;
        s = mix_seed(s ^ static_cast<std::uint64_t>(c.d));
        std::uint64_t gap_bits = 0;
        std::memcpy(&gap_bits, &c.gap, sizeof gap_bits);
        s = mix_seed(s ^ gap_bits);
        s = mix_seed(s ^ static_cast<std::uint64_t>(c.instance));
        Rng rng(s);

        const LowerTriangular<double> b = random_separated_lower(rng, c.d, c.gap, 1.0);
        // the requested gap is enforced by construction; no separation gate here
        const SpectrumInfo<double> info = validate_simple_spectrum(b, 0.0);

        Row row;
        row.d = c.d;
        row.gap = c.gap;

        auto clock = [&](int slot, auto&& f) {
            if (!o.time) {
                f();
                return;
            }
            const auto start = std::chrono::steady_clock::now();
            f();
            row.nanos[slot] = Phases::elapsed(start);
        };

        ThetaTable<double> table(c.d);
        LowerTriangular<double> p_theta(c.d);
        LowerTriangular<double> p_parlett(c.d);
        DenseMatrix<double> p_eigen;
        clock(0, [&] {
            table = compute_theta(b, info);
            p_theta = apply(b, table, Exp{1.0});
        });
        clock(1, [&] { p_parlett = parlett_apply(b, Exp{1.0}, 0.0); });
        clock(2, [&] {
            const EigenPair<double> pair = eigenvector_pair(b, info);
            Eigen::VectorXd exp_diag(c.d);
            for (int i = 0; i < c.d; ++i) exp_diag(i) = std::exp(b.diagonal(i));
            p_eigen = dense_from(pair.u) * exp_diag.asDiagonal() * dense_from(pair.u_inv);
        });

        const DenseMatrix<double> d_theta = dense_from(p_theta);
        const DenseMatrix<double> d_parlett = dense_from(p_parlett);
        const DenseMatrix<double> diff_tp = d_theta - d_parlett;
        const DenseMatrix<double> diff_te = d_theta - p_eigen;
        const DenseMatrix<double> diff_pe = d_parlett - p_eigen;
        row.residual = std::max({max_abs(diff_tp), max_abs(diff_te), max_abs(diff_pe)});
        row.conditioning = conditioning_indicator(table);
        rows[idx] = row;
    };

    if (o.parallel && combos.size() > 1) {
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::min<std::size_t>(
            std::max(std::thread::hardware_concurrency(), 1u), combos.size());
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < combos.size(); i = next.fetch_add(1))
                    run_combo(i);
            });
        for (std::thread& th : pool) th.join();
    } else {
        for (std::size_t i = 0; i < combos.size(); ++i) run_combo(i);
    }

    static const char* const route_names[3] = {"theta", "parlett", "eigen"};
    std::string out = "d,gap,route,nanos,residual,conditioning\n";
    for (const Row& row : rows)
        for (int r = 0; r < 3; ++r) {
            out += std::to_string(row.d);
            out += ',';
            out += io::format_float(row.gap, g_digits);
            out += ',';
            out += route_names[r];
            out += ',';
            out += std::to_string(row.nanos[r]);
            out += ',';
            out += io::format_float(row.residual, g_digits);
            out += ',';
            out += io::format_float(row.conditioning, g_digits);
            out += '\n';
        }
    std::cout << out;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    g_digits = io::float_digits_from_env();

    CLI::App app{"functions of triangular matrices through one reusable coefficient table"};
    app.require_subcommand(1);

    ThetaOptions theta_opts;
    CLI::App* theta_cmd =
        app.add_subcommand("theta", "compute the coefficient table and its identity residuals");
    add_input_options(theta_cmd, theta_opts.in);
    theta_cmd->add_option("--sep-tol", theta_opts.sep_tol, "minimum relative diagonal separation")
        ->capture_default_str();
    theta_cmd->add_option("--check-tol", theta_opts.check_tol, "identity residual tolerance")
        ->capture_default_str();
    theta_cmd->add_flag("--time", theta_opts.time, "measure phase times (breaks byte-identical output)");

    ApplyOptions apply_opts;
    CLI::App* apply_cmd = app.add_subcommand("apply", "apply a scalar function to the matrix");
    add_input_options(apply_cmd, apply_opts.in);
    apply_cmd->add_option("function", apply_opts.fn.name, "one of exp, log, pow, inv, poly")
        ->required()
        ->check(CLI::IsMember({"exp", "log", "pow", "inv", "poly"}));
    apply_cmd->add_option("--t", apply_opts.fn.t, "time factor for exp")->capture_default_str();
    apply_cmd->add_option("--alpha", apply_opts.fn.alpha, "exponent for pow")->capture_default_str();
    apply_cmd->add_option("--coeffs", apply_opts.fn.coefficients,
                          "polynomial coefficients, ascending in degree")
        ->delimiter(',');
    apply_cmd->add_option("--route", apply_opts.route, "evaluation route")
        ->check(CLI::IsMember({"theta", "parlett"}))
        ->capture_default_str();
    apply_cmd->add_flag("--oracle", apply_opts.oracle,
                        "cross-check against an independent dense reference");
    apply_cmd->add_option("--sep-tol", apply_opts.sep_tol, "minimum relative diagonal separation")
        ->capture_default_str();
    apply_cmd->add_option("--check-tol", apply_opts.check_tol, "largest accepted oracle residual")
        ->capture_default_str();
    apply_cmd->add_flag("--time", apply_opts.time, "measure phase times (breaks byte-identical output)");

    GeneratorOptions gen_opts;
    CLI::App* gen_cmd =
        app.add_subcommand("generator", "extract the generator from one semigroup snapshot");
    add_input_options(gen_cmd, gen_opts.in);
    gen_cmd->add_option("--t", gen_opts.t, "snapshot time, must be positive")->capture_default_str();
    gen_cmd->add_option("--sep-tol", gen_opts.sep_tol, "minimum relative diagonal separation")
        ->capture_default_str();
    gen_cmd->add_option("--markov-tol", gen_opts.markov_tol, "stochasticity tolerance")
        ->capture_default_str();
    gen_cmd->add_option("--check-tol", gen_opts.check_tol, "identity residual tolerance")
        ->capture_default_str();
    gen_cmd->add_flag("--time", gen_opts.time, "measure phase times (breaks byte-identical output)");

    SemigroupOptions semi_opts;
    CLI::App* semi_cmd =
        app.add_subcommand("semigroup", "evaluate exp(t B) for several times from one table");
    add_input_options(semi_cmd, semi_opts.in);
    semi_cmd->add_option("--ts", semi_opts.times, "evaluation times")->delimiter(',')->required();
    semi_cmd->add_option("--sep-tol", semi_opts.sep_tol, "minimum relative diagonal separation")
        ->capture_default_str();
    semi_cmd->add_option("--check-tol", semi_opts.check_tol, "identity residual tolerance")
        ->capture_default_str();
    semi_cmd->add_flag("--parallel", semi_opts.parallel, "evaluate the times concurrently");
    semi_cmd->add_flag("--time", semi_opts.time, "measure phase times (breaks byte-identical output)");

    CheckOptions check_opts;
    CLI::App* check_cmd =
        app.add_subcommand("check", "run the identity and stochasticity checks only");
    add_input_options(check_cmd, check_opts.in);
    check_cmd->add_option("--sep-tol", check_opts.sep_tol, "minimum relative diagonal separation")
        ->capture_default_str();
    check_cmd->add_option("--check-tol", check_opts.check_tol, "identity residual tolerance")
        ->capture_default_str();
    check_cmd->add_option("--markov-tol", check_opts.markov_tol, "stochasticity tolerance")
        ->capture_default_str();
    check_cmd->add_flag("--time", check_opts.time, "measure phase times (breaks byte-identical output)");

    BenchOptions bench_opts;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "compare the table route, the commutation-equation route and "
                                    "the diagonalization oracle on seeded random matrices");
    bench_cmd->add_option("--dims", bench_opts.dims, "matrix dimensions")->delimiter(',')->required();
    bench_cmd->add_option("--gaps,--separations", bench_opts.gaps, "minimum diagonal gaps")
        ->delimiter(',')
        ->required();
    bench_cmd->add_option("--seed", bench_opts.seed, "stream seed")->capture_default_str();
    bench_cmd->add_option("--instances", bench_opts.instances, "matrices per (d, gap) cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_cmd->add_flag("--parallel", bench_opts.parallel, "run the cells concurrently");
    bench_cmd->add_flag("--time", bench_opts.time,
                        "measure route times (breaks byte-identical output)");

    int rc = 0;
    theta_cmd->callback([&] { rc = run_guarded([&] { return cmd_theta(theta_opts); }); });
    apply_cmd->callback([&] { rc = run_guarded([&] { return cmd_apply(apply_opts); }); });
    gen_cmd->callback([&] { rc = run_guarded([&] { return cmd_generator(gen_opts); }); });
    semi_cmd->callback([&] { rc = run_guarded([&] { return cmd_semigroup(semi_opts); }); });
    check_cmd->callback([&] { rc = run_guarded([&] { return cmd_check(check_opts); }); });
    bench_cmd->callback([&] { rc = run_guarded([&] { return cmd_bench(bench_opts); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        emit_error(2, "UsageError", e.what());
        return 2;
    }
    return rc;
}
