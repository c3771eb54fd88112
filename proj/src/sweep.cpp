#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "cgra/errors.hpp"
#include "cgra/report.hpp"
#include "json_util.hpp"

namespace cgra {

namespace {

double ratio(double v, double base) {
    if (base == 0.0) return v == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return v / base;
}

double reduction_pct(double v, double base) { return base == 0.0 ? 0.0 : (base - v) / base * 100.0; }

}  // namespace

Comparison compare_runs(const std::vector<RunResult>& runs, const std::string& baseline_id) {
    if (runs.empty()) throw ValidationError("runs", "nothing to compare");
    const auto base_it =
        std::find_if(runs.begin(), runs.end(), [&](const RunResult& r) { return r.id == baseline_id; });
    if (base_it == runs.end()) throw ValidationError("baseline", "no run with id '" + baseline_id + "'");
    const RunResult& base = *base_it;

    Comparison c;
    c.baseline_id = baseline_id;
    std::set<std::string> seen;
    for (const auto& r : runs) {
        if (!seen.insert(r.id).second) c.warnings.push_back("duplicate run id '" + r.id + "'");
        if (r.digests.final_memory != base.digests.final_memory)
            c.warnings.push_back("run '" + r.id + "' ends with a different memory image than baseline '" +
                                 baseline_id + "'");
        ComparisonRow row;
        row.id = r.id;
        row.latency_cc = r.latency_cc;
        row.latency_ns = r.latency_ns;
        row.energy_pj = r.energy_pj;
        row.avg_power_mw = r.avg_power_mw;
        row.latency_ratio = ratio(r.latency_ns, base.latency_ns);
        row.energy_ratio = ratio(r.energy_pj, base.energy_pj);
        row.power_ratio = ratio(r.avg_power_mw, base.avg_power_mw);
        row.latency_reduction_pct = reduction_pct(r.latency_ns, base.latency_ns);
        row.energy_reduction_pct = reduction_pct(r.energy_pj, base.energy_pj);
        row.power_reduction_pct = reduction_pct(r.avg_power_mw, base.avg_power_mw);
        c.rows.push_back(row);
    }
    return c;
}

nlohmann::json to_json(const Comparison& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"run_id", r.id},
                        {"latency_cc", r.latency_cc},
                        {"latency_ns", round6(r.latency_ns)},
                        {"energy_pj", round6(r.energy_pj)},
                        {"avg_power_mw", round6(r.avg_power_mw)},
                        {"latency_ratio", round6(r.latency_ratio)},
                        {"energy_ratio", round6(r.energy_ratio)},
                        {"power_ratio", round6(r.power_ratio)},
                        {"latency_reduction_pct", round6(r.latency_reduction_pct)},
                        {"energy_reduction_pct", round6(r.energy_reduction_pct)},
                        {"power_reduction_pct", round6(r.power_reduction_pct)}});
    return {{"baseline", c.baseline_id}, {"runs", std::move(rows)}, {"warnings", c.warnings}};
}

std::string comparison_csv(const Comparison& c) {
    std::string out =
        "run_id,latency_cc,latency_ns,energy_pj,avg_power_mw,latency_ratio,energy_ratio,power_ratio,"
        "latency_reduction_pct,energy_reduction_pct,power_reduction_pct\n";
    for (const auto& r : c.rows)
        out += r.id + ',' + std::to_string(r.latency_cc) + ',' + fmt6(r.latency_ns) + ',' + fmt6(r.energy_pj) + ',' +
               fmt6(r.avg_power_mw) + ',' + fmt6(r.latency_ratio) + ',' + fmt6(r.energy_ratio) + ',' +
               fmt6(r.power_ratio) + ',' + fmt6(r.latency_reduction_pct) + ',' + fmt6(r.energy_reduction_pct) + ',' +
               fmt6(r.power_reduction_pct) + '\n';
    return out;
}

// ---------------------------------------------------------------------------

SweepSpec sweep_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    using namespace detail;
    expect_object(j, "sweep");
    reject_unknown_keys(j, {"arch", "variants", "note"}, "sweep");
    require_key(j, "arch", "sweep");
    require_key(j, "variants", "sweep");

    SweepSpec spec;
    spec.base_arch = base_dir / get_string(j, "arch", "sweep.");
    const auto& vs = j.at("variants");
    if (!vs.is_array() || vs.empty()) throw ValidationError("variants", "need at least one variant (the baseline)");

    std::set<std::string> names;
    for (const auto& v : vs) {
        expect_object(v, "sweep variant");
        reject_unknown_keys(v, {"name", "note", "arch_patch", "char_patch", "op_power_scale"}, "sweep variant");
        require_key(v, "name", "sweep variant");
        SweepVariant sv;
        sv.name = get_string(v, "name", "variant.");
        if (sv.name.empty()) throw ValidationError("variants.name", "must not be empty");
        if (!names.insert(sv.name).second) throw ValidationError("variants.name", "duplicate '" + sv.name + "'");
        if (v.contains("arch_patch")) {
            expect_object(v.at("arch_patch"), "arch_patch");
            sv.arch_patch = v.at("arch_patch");
        }
        if (v.contains("char_patch")) {
            expect_object(v.at("char_patch"), "char_patch");
            sv.char_patch = v.at("char_patch");
        }
        if (v.contains("op_power_scale")) {
            const auto& s = v.at("op_power_scale");
            expect_object(s, "op_power_scale");
            for (const auto& [mn, f] : s.items()) {
                if (!opcode_from_mnemonic(mn))
                    throw ValidationError("op_power_scale", "unknown opcode '" + mn + "'");
                if (!f.is_number() || !(f.get<double>() > 0.0))
                    throw ValidationError("op_power_scale." + mn, "must be a positive number");
                sv.op_power_scale[std::string(mnemonic(*opcode_from_mnemonic(mn)))] = f.get<double>();
            }
        }
        spec.variants.push_back(std::move(sv));
    }
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    return sweep_spec_from_json(detail::parse_json_file(path), path.parent_path());
}

SweepResult run_sweep(const SweepInputs& in) {
    const nlohmann::json base_arch = detail::parse_json_file(in.spec.base_arch);
    const nlohmann::json base_char = detail::parse_json_file(in.characterization);
    const auto n = in.spec.variants.size();

    // Inputs are resolved up front so every error surfaces before any run starts.
    std::vector<SweepVariantRun> runs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = in.spec.variants[i];
        nlohmann::json aj = base_arch;
        aj.merge_patch(v.arch_patch);
        aj["name"] = v.name;
        nlohmann::json cj = base_char;
        cj.merge_patch(v.char_patch);

        runs[i].name = v.name;
        runs[i].arch = architecture_from_json(aj);
        CharacterizationModel m = characterization_from_json(cj);
        if (!cj.contains("name")) m.name = in.characterization.stem().string();
        for (const auto& [mn, f] : v.op_power_scale) m.op_power_mw[index(*opcode_from_mnemonic(mn))] *= f;
        lint(m);
        runs[i].model = std::move(m);
    }

    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                auto& r = runs[i];
                const Kernel kernel = load_kernel(in.kernel, r.arch);
                const MemoryImage mem0 = in.memory ? load_memory_image(*in.memory, r.arch) : MemoryImage(r.arch);
                EstimateOptions opts = in.options;
                opts.id = r.name;
                r.estimate = estimate(kernel, r.arch, r.model, mem0, opts);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1U, std::min<unsigned>(in.jobs, static_cast<unsigned>(n)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepResult out;
    std::vector<RunResult> results;
    results.reserve(n);
    for (const auto& r : runs) results.push_back(r.estimate.result);
    out.comparison = compare_runs(results, in.spec.variants.front().name);
    out.runs = std::move(runs);
    return out;
}

}  // namespace cgra
