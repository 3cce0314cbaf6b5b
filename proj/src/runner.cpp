#include "iongate/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

namespace iongate {

using nlohmann::json;

namespace {

std::pair<DriveProgram, double> make_program(const ExperimentConfig& cfg, const SystemSpec& sys,
                                             GateVariant variant, std::pair<int, int> pair) {
    if (cfg.custom_program) return {*cfg.custom_program, 0.0};
    GateTarget tgt;
    tgt.pair = pair;
    tgt.phi = cfg.phi_t;
    tgt.variant = variant;
    DriveProgram prog = synthesize(sys, tgt, cfg.delta, cfg.central_mode);
    const RealMatrix eta2 = pair_eta(sys, tgt);
    double peak = std::max(prog.peak_rate(0, eta2), prog.peak_rate(1, eta2));
    if (cfg.amplitude_cap && peak > *cfg.amplitude_cap) {
        // tone amplitudes scale linearly with delta at fixed phase target
        const double delta2 = cfg.delta * (*cfg.amplitude_cap / peak);
        prog = synthesize(sys, tgt, delta2, cfg.central_mode);
        peak = std::max(prog.peak_rate(0, eta2), prog.peak_rate(1, eta2));
        prog.warnings.push_back("detuning rescaled to meet the amplitude cap");
    }
    return {prog, peak};
}

double fock_fidelity(const ExperimentConfig& cfg, const DriveProgram& prog,
                     const RealMatrix& eta2, const NoiseSpec& noise, const ErrorShift& shifts,
                     const std::vector<int>& fock, const Matrix& target, GateReport& report) {
    const PropagationOptions opts = cfg.propagation();
    ChannelDiagnostics diag;
    double fid = 0.0;
    if (!noise.is_zero() && cfg.perturbative_dissipation) {
        // unitary part plus first-order rotated-frame dissipation
        NoiseSpec off = NoiseSpec::none(static_cast<int>(eta2.cols()));
        const SpinChannel unit = per_fock_channel(prog, eta2, cfg.level, shifts, off, fock,
                                                  cfg.coupling, cfg.cutoff_margin, opts, &diag);
        const double f_u = gate_fidelity(unit, target);
        std::vector<int> cutoffs = diag.cutoffs;
        const FockSpace space(2, cutoffs);
        const HamiltonianTerms ht = build_terms(prog, eta2, space, cfg.level, shifts);
        const DyadMap dmap = perturbative_dissipation_map(ht, noise, fock, opts);
        SpinChannel pert = SpinChannel::identity_channel(4);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) pert.at(a, b) += dmap(a, b);
        const double f_d = gate_fidelity(pert, Matrix::Identity(4, 4));
        fid = f_u + f_d - 1.0;
        const ProcessMatrix pm = process_matrix(dmap);
        report.chi = pm.chi;
        report.has_chi = true;
        if (!pm.consistent)
            report.warnings.push_back("process-matrix residual above tolerance");
    } else {
        const SpinChannel chan = per_fock_channel(prog, eta2, cfg.level, shifts, noise, fock,
                                                  cfg.coupling, cfg.cutoff_margin, opts, &diag);
        fid = gate_fidelity(chan, target);
    }
    report.leakage = std::max(report.leakage, diag.leakage);
    report.block_path = diag.used_block_path;
    for (int c : diag.cutoffs) report.cutoff_max = std::max(report.cutoff_max, c);
    if (diag.cutoff_growths > 0)
        report.warnings.push_back("cutoff grown " + std::to_string(diag.cutoff_growths) +
                                  "x by the leakage check");
    return fid;
}

} // namespace

GateReport evaluate_gate(const ExperimentConfig& cfg, GateVariant variant,
                         std::pair<int, int> pair) {
    GateReport report;
    const SystemSpec sys = cfg.make_system();
    const int n_modes = sys.n_modes();
    auto [prog, peak] = make_program(cfg, sys, variant, pair);
    report.amp_peak = peak;
    for (const std::string& w : prog.warnings) report.warnings.push_back(w);

    GateTarget tgt;
    tgt.pair = pair;
    tgt.phi = cfg.phi_t;
    tgt.variant = variant;
    const RealMatrix eta2 = pair_eta(sys, tgt);
    const NoiseSpec noise = cfg.make_noise(n_modes);
    const ErrorShift shifts = cfg.make_shifts(n_modes);
    const Matrix target = ms_reference_unitary(cfg.phi_t, 2, false);

    double gamma_t = 0.0;
    for (int l = 0; l < n_modes; ++l)
        gamma_t = std::max({gamma_t, noise.gamma_minus[static_cast<size_t>(l)],
                            noise.gamma_plus[static_cast<size_t>(l)],
                            noise.gamma_dephase[static_cast<size_t>(l)]});
    gamma_t *= prog.gate_time;
    if (cfg.perturbative_dissipation && gamma_t > 0.3)
        report.warnings.push_back("gamma*T above 0.3: first-order dissipation is inaccurate");

    if (!cfg.thermal) {
        const std::vector<int> fock = cfg.initial_fock(n_modes);
        const double f = fock_fidelity(cfg, prog, eta2, noise, shifts, fock, target, report);
        report.per_fock[fock] = f;
        report.fidelity = f;
    } else {
        if (n_modes > 2)
            throw std::invalid_argument(
                "thermal initial states are supported for two-mode systems");
        // per-mode support from the geometric tail, then a sub-lattice of runs
        const double nb = cfg.thermal_nbar;
        int support = 0;
        if (nb > 0) {
            const double q = nb / (1.0 + nb);
            support = static_cast<int>(std::ceil(std::log(cfg.thermal_support_tail) /
                                                 std::log(q))) +
                      1;
        }
        std::vector<int> gridpts;
        const int npts = cfg.thermal_grid_points > 0
                             ? cfg.thermal_grid_points
                             : std::min(support + 1, support <= 24 ? support + 1 : 13);
        const int stride = std::max(1, (support + npts - 1) / std::max(1, npts - 1));
        for (int n = 0; n <= support; n += stride) gridpts.push_back(n);
        if (gridpts.back() != support) gridpts.push_back(support);

        std::map<std::vector<int>, double> table;
        std::vector<std::vector<int>> grid_states;
        if (n_modes == 1) {
            for (int g : gridpts) grid_states.push_back({g});
        } else {
            for (int gi : gridpts)
                for (int gj : gridpts) grid_states.push_back({gi, gj});
        }
        for (const auto& n : grid_states)
            table[n] = fock_fidelity(cfg, prog, eta2, noise, shifts, n, target, report);
        report.per_fock = table;

        // multilinear interpolation onto the full support lattice
        const auto f_at = [&](const std::vector<int>& n) {
            if (gridpts.size() == 1) return table.at(n);
            // locate brackets per mode
            std::array<size_t, 2> lo{0, 0};
            std::array<double, 2> w{0.0, 0.0};
            for (int l = 0; l < n_modes; ++l) {
                size_t hi = 1;
                while (hi + 1 < gridpts.size() &&
                       gridpts[hi] < n[static_cast<size_t>(l)])
                    ++hi;
                const double x0 = gridpts[hi - 1], x1 = gridpts[hi];
                lo[static_cast<size_t>(l)] = hi - 1;
                w[static_cast<size_t>(l)] =
                    (x1 == x0) ? 0.0 : (n[static_cast<size_t>(l)] - x0) / (x1 - x0);
            }
            double acc = 0.0;
            for (int corner = 0; corner < (1 << n_modes); ++corner) {
                double weight = 1.0;
                std::vector<int> key;
                for (int l = 0; l < n_modes; ++l) {
                    const bool up = (corner >> l) & 1;
                    weight *= up ? w[static_cast<size_t>(l)] : 1.0 - w[static_cast<size_t>(l)];
                    key.push_back(gridpts[lo[static_cast<size_t>(l)] + (up ? 1 : 0)]);
                }
                if (weight != 0.0) acc += weight * table.at(key);
            }
            return acc;
        };

        // geometric weights; renormalized over the captured support
        const auto pv = [&](int n) {
            return nb == 0.0 ? (n == 0 ? 1.0 : 0.0)
                             : std::exp(n * std::log(nb) - (n + 1) * std::log1p(nb));
        };
        double mass = 0.0;
        double acc = 0.0;
        std::vector<int> n(static_cast<size_t>(n_modes), 0);
        const long lattice = static_cast<long>(std::pow(support + 1.0, n_modes));
        for (long it = 0; it < lattice; ++it) {
            long rem = it;
            double p = 1.0;
            for (int l = 0; l < n_modes; ++l) {
                n[static_cast<size_t>(l)] = static_cast<int>(rem % (support + 1));
                rem /= (support + 1);
                p *= pv(n[static_cast<size_t>(l)]);
            }
            mass += p;
            acc += p * f_at(n);
        }
        report.fidelity = acc / mass;
        const double min_mass = std::pow(1.0 - cfg.thermal_support_tail, n_modes) - 1e-12;
        if (mass < min_mass)
            throw needs_more_states("thermal support mass " + std::to_string(mass) +
                                        " below the configured tail bound",
                                    min_mass - mass);
    }
    report.infidelity = 1.0 - report.fidelity;
    return report;
}

// --- sweep ------------------------------------------------------------------------

RunOutput run_experiment(const ExperimentConfig& cfg, int workers) {
    RunOutput out;
    for (const auto& ax : cfg.axes) out.axis_names.push_back(ax.field);

    long n_points = 1;
    for (const auto& ax : cfg.axes) n_points *= static_cast<long>(ax.values.size());

    std::vector<std::pair<int, int>> pairs;
    if (cfg.all_pairs) {
        for (int i = 0; i < cfg.n_ions; ++i)
            for (int j = i + 1; j < cfg.n_ions; ++j) pairs.emplace_back(i, j);
    } else {
        pairs.push_back(cfg.pair);
    }

    struct Job {
        long point;
        std::vector<double> axis_values;
        size_t variant_idx;
        std::pair<int, int> pair;
    };
    std::vector<Job> jobs;
    for (long p = 0; p < n_points; ++p) {
        std::vector<double> axis_values;
        long rem = p;
        // last axis fastest: lexicographic in declared order
        std::vector<long> idx(cfg.axes.size(), 0);
        for (long a = static_cast<long>(cfg.axes.size()) - 1; a >= 0; --a) {
            idx[static_cast<size_t>(a)] =
                rem % static_cast<long>(cfg.axes[static_cast<size_t>(a)].values.size());
            rem /= static_cast<long>(cfg.axes[static_cast<size_t>(a)].values.size());
        }
        for (size_t a = 0; a < cfg.axes.size(); ++a)
            axis_values.push_back(cfg.axes[a].values[static_cast<size_t>(idx[a])]);
        for (size_t v = 0; v < cfg.variants.size(); ++v)
            for (const auto& pr : pairs) jobs.push_back({p, axis_values, v, pr});
    }

    std::vector<ResultRecord> results(jobs.size());
    std::atomic<size_t> cursor{0};
    std::atomic<bool> any_failed{false};

    int n_workers = workers;
    if (n_workers <= 0) {
        if (const char* env = std::getenv("IONGATE_WORKERS")) n_workers = std::atoi(env);
        if (n_workers <= 0)
            n_workers = static_cast<int>(std::thread::hardware_concurrency());
        if (n_workers <= 0) n_workers = 1;
    }
    n_workers = std::min<long>(n_workers, static_cast<long>(jobs.size()));

    const auto worker = [&]() {
        while (true) {
            const size_t k = cursor.fetch_add(1);
            if (k >= jobs.size()) return;
            const Job& job = jobs[k];
            ResultRecord rec;
            rec.point = job.point;
            rec.axis_values = job.axis_values;
            rec.variant = variant_name(cfg.variants[job.variant_idx]);
            rec.pair_id =
                std::to_string(job.pair.first + 1) + "-" + std::to_string(job.pair.second + 1);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                ExperimentConfig point_cfg = cfg;
                for (size_t a = 0; a < cfg.axes.size(); ++a)
                    point_cfg.apply_axis(cfg.axes[a].field, job.axis_values[a]);
                const GateReport rep =
                    evaluate_gate(point_cfg, cfg.variants[job.variant_idx], job.pair);
                rec.fidelity = rep.fidelity;
                rec.infidelity = rep.infidelity;
                rec.leakage = rep.leakage;
                rec.amp_peak = rep.amp_peak;
                rec.cutoff_max = rep.cutoff_max;
            } catch (const std::exception& e) {
                rec.status = e.what();
                rec.fidelity = std::nan("");
                rec.infidelity = std::nan("");
                any_failed.store(true);
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            results[k] = std::move(rec);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // deterministic merge: jobs were generated in output order already; add the
    // ratio column and per-point aggregates
    const size_t span = cfg.variants.size() * pairs.size();
    for (long p = 0; p < n_points; ++p) {
        const size_t base = static_cast<size_t>(p) * span;
        if (cfg.variants.size() == 2) {
            for (size_t q = 0; q < pairs.size(); ++q) {
                ResultRecord& first = results[base + q];
                const ResultRecord& second = results[base + pairs.size() + q];
                if (first.status == "ok" && second.status == "ok" && second.infidelity > 0)
                    first.infid_ratio = first.infidelity / second.infidelity;
            }
        }
        for (size_t q = 0; q < span; ++q) out.records.push_back(results[base + q]);
        if (pairs.size() > 1) {
            for (size_t v = 0; v < cfg.variants.size(); ++v) {
                double mean = 0.0, lo = 1e300, hi = -1e300;
                int n_ok = 0;
                for (size_t q = 0; q < pairs.size(); ++q) {
                    const ResultRecord& r = results[base + v * pairs.size() + q];
                    if (r.status != "ok" || std::isnan(r.infidelity)) continue;
                    mean += r.infidelity;
                    lo = std::min(lo, r.infidelity);
                    hi = std::max(hi, r.infidelity);
                    ++n_ok;
                }
                if (n_ok == 0) continue;
                mean /= n_ok;
                for (const char* tag : {"mean", "min", "max"}) {
                    ResultRecord agg;
                    agg.point = p;
                    agg.axis_values = results[base].axis_values;
                    agg.variant = variant_name(cfg.variants[v]);
                    agg.pair_id = tag;
                    agg.infidelity = tag == std::string("mean") ? mean
                                     : tag == std::string("min") ? lo
                                                                 : hi;
                    agg.fidelity = 1.0 - agg.infidelity;
                    out.records.push_back(std::move(agg));
                }
            }
        }
    }
    out.exit_code = any_failed.load() ? 3 : 0;
    return out;
}

// --- emitters -----------------------------------------------------------------------

std::string format_g12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void emit_csv(std::ostream& os, const RunOutput& out) {
    os << "point";
    for (const auto& a : out.axis_names) os << "," << a;
    os << ",variant,pair,fidelity,infidelity,infidelity_ratio,leakage,amp_peak_rate,"
          "cutoff_max,status\n";
    for (const ResultRecord& r : out.records) {
        os << r.point;
        for (double v : r.axis_values) os << "," << format_g12(v);
        os << "," << r.variant << "," << r.pair_id << "," << format_g12(r.fidelity) << ","
           << format_g12(r.infidelity) << ",";
        if (r.infid_ratio) os << format_g12(*r.infid_ratio);
        os << "," << format_g12(r.leakage) << "," << format_g12(r.amp_peak) << ","
           << r.cutoff_max << ",";
        std::string status = r.status;
        for (char& ch : status)
            if (ch == ',' || ch == '\n') ch = ';';
        os << status << "\n";
    }
}

void emit_jsonl(std::ostream& os, const RunOutput& out) {
    for (const ResultRecord& r : out.records) {
        json j;
        j["point"] = r.point;
        for (size_t a = 0; a < out.axis_names.size(); ++a)
            j["axes"][out.axis_names[a]] = r.axis_values[a];
        j["variant"] = r.variant;
        j["pair"] = r.pair_id;
        j["fidelity"] = r.fidelity;
        j["infidelity"] = r.infidelity;
        if (r.infid_ratio) j["infidelity_ratio"] = *r.infid_ratio;
        j["leakage"] = r.leakage;
        j["amp_peak_rate"] = r.amp_peak;
        j["cutoff_max"] = r.cutoff_max;
        j["status"] = r.status;
        j["wall_ms"] = r.wall_ms;
        os << j.dump() << "\n";
    }
}

void emit_plotdata(std::ostream& os, const RunOutput& out) {
    // series keyed by (variant, pair); x = first sweep axis, y = infidelity
    std::vector<std::pair<std::string, std::string>> series;
    for (const ResultRecord& r : out.records) {
        const auto key = std::make_pair(r.variant, r.pair_id);
        if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
    }
    bool first = true;
    for (const auto& [variant, pair_id] : series) {
        if (!first) os << "\n\n";
        first = false;
        os << "# series: variant=" << variant << " pair=" << pair_id << "\n";
        os << "# x=" << (out.axis_names.empty() ? "point" : out.axis_names[0])
           << " y=infidelity\n";
        for (const ResultRecord& r : out.records) {
            if (r.variant != variant || r.pair_id != pair_id) continue;
            const double x = r.axis_values.empty() ? static_cast<double>(r.point)
                                                   : r.axis_values[0];
            os << format_g12(x) << " " << format_g12(r.infidelity) << "\n";
        }
    }
}

int write_outputs(const ExperimentConfig& cfg, const RunOutput& out) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_directory, ec);
    for (const std::string& fmt : cfg.formats) {
        const std::string ext = fmt == "csv" ? ".csv" : fmt == "jsonl" ? ".jsonl" : ".dat";
        const fs::path path = fs::path(cfg.out_directory) / (cfg.out_basename + ext);
        std::ofstream os(path);
        if (!os) return 4;
        if (fmt == "csv")
            emit_csv(os, out);
        else if (fmt == "jsonl")
            emit_jsonl(os, out);
        else
            emit_plotdata(os, out);
        if (!os.good()) return 4;
    }
    return 0;
}

RunOutput read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    RunOutput out;
    std::string line;
    bool axes_known = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        ResultRecord r;
        r.point = j.value("point", 0L);
        if (j.contains("axes")) {
            if (!axes_known) {
                for (const auto& [k, v] : j["axes"].items()) {
                    (void)v;
                    out.axis_names.push_back(k);
                }
                axes_known = true;
            }
            for (const auto& name : out.axis_names)
                r.axis_values.push_back(j["axes"].value(name, 0.0));
        }
        r.variant = j.value("variant", "");
        r.pair_id = j.value("pair", "");
        r.fidelity = j.value("fidelity", 0.0);
        r.infidelity = j.value("infidelity", 0.0);
        if (j.contains("infidelity_ratio")) r.infid_ratio = j["infidelity_ratio"].get<double>();
        r.leakage = j.value("leakage", 0.0);
        r.amp_peak = j.value("amp_peak_rate", 0.0);
        r.cutoff_max = j.value("cutoff_max", 0);
        r.status = j.value("status", "ok");
        r.wall_ms = j.value("wall_ms", 0.0);
        out.records.push_back(std::move(r));
    }
    return out;
}

} // namespace iongate
