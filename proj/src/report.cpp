#include "cgra/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include <openssl/evp.h>

#include "cgra/bitstream.hpp"
#include "cgra/errors.hpp"
#include "json_util.hpp"

namespace cgra {

std::string fmt6(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double round6(double v) { return std::stod(fmt6(v)); }

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string digest(const MemoryImage& mem) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(mem.capacity_words() * 4);
    for (auto w : mem.words()) {
        const auto u = static_cast<std::uint32_t>(w);
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    return sha256_hex(bytes);
}

namespace {

std::string content_digest(nlohmann::json j) {
    j.erase("name");
    return sha256_hex(j.dump());
}

std::string_view to_string(Termination t) { return t == Termination::Exited ? "exited" : "max_steps"; }

Termination termination_from_string(std::string_view s) {
    if (s == "exited") return Termination::Exited;
    if (s == "max_steps") return Termination::MaxSteps;
    throw ParseError("unknown termination '" + std::string(s) + "'");
}

nlohmann::json heatmap_json(const Heatmap& h) {
    nlohmann::json grid = nlohmann::json::array();
    for (int r = 0; r < h.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < h.cols; ++c) row.push_back(round6(h.at(r, c)));
        grid.push_back(std::move(row));
    }
    return {{"unit", std::string(to_string(h.unit))}, {"scope", h.scope}, {"cells", std::move(grid)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

}  // namespace

Estimate estimate(const Kernel& kernel, const Architecture& arch, const CharacterizationModel& model,
                  const MemoryImage& mem0, const EstimateOptions& opts) {
    auto ran = run(kernel, arch, mem0, opts.max_steps);
    const EffectiveModel eff = resolve(model, opts.fidelity);

    Estimate est;
    est.trace = std::move(ran.trace);
    est.final_memory = std::move(ran.final_state.memory);
    est.timings = trace_timing(est.trace, arch, eff);
    est.energy = kernel_energy(est.trace, est.timings, arch, eff);
    const KernelLatency lat = kernel_latency(est.timings, arch);

    RunResult& r = est.result;
    r.id = opts.id.empty() ? kernel.name : opts.id;
    r.kernel_name = kernel.name;
    r.arch_name = arch.name;
    r.char_name = model.name;
    r.digests.kernel = sha256_hex(encode_bitstream(kernel, arch));
    r.digests.arch = content_digest(to_json(arch));
    r.digests.characterization = content_digest(to_json(model));
    r.digests.memory = digest(mem0);
    r.digests.final_memory = digest(est.final_memory);
    r.fidelity = opts.fidelity;
    r.termination = est.trace.termination;
    r.steps = est.trace.steps.size();
    r.latency_cc = lat.cycles;
    r.latency_ns = lat.ns;
    r.energy_pj = est.energy.total_pj;
    r.avg_power_mw = est.energy.avg_power_mw;
    r.energy_heatmap = est.energy.energy;

    std::map<std::size_t, InstructionRow> per_pc;
    for (std::size_t s = 0; s < est.trace.steps.size(); ++s) {
        const auto& se = est.energy.steps[s];
        const std::size_t pc = est.trace.steps[s].pc;
        r.per_step.push_back(StepRow{s, pc, est.timings[s].total_cc, se.duration_ns, se.total_pj,
                                     se.duration_ns > 0.0 ? se.total_pj / se.duration_ns : 0.0});
        auto& row = per_pc[pc];
        row.pc = pc;
        row.executions += 1;
        row.cycles += est.timings[s].total_cc;
        row.energy_pj += se.total_pj;
        for (const auto& pe : se.pes) {
            r.breakdown.decode_pj += pe.decode_pj;
            r.breakdown.active_pj += pe.active_pj;
            r.breakdown.idle_pj += pe.idle_pj;
            r.breakdown.switch_pj += pe.switch_pj;
            r.breakdown.operand_adder_pj += pe.operand_adder_pj;
        }
    }
    for (auto& [pc, row] : per_pc) {
        const double ns = static_cast<double>(row.cycles) * arch.clock_period_ns;
        row.avg_power_mw = ns > 0.0 ? row.energy_pj / ns : 0.0;
        r.per_instruction.push_back(row);
        r.instruction_heatmaps.emplace_back(pc, instruction_power_heatmap(est.trace, est.energy, pc, arch));
    }

    r.warnings = est.trace.warnings;
    if (est.trace.termination == Termination::MaxSteps)
        r.warnings.push_back("run stopped after max_steps=" + std::to_string(opts.max_steps) + " without EXIT");
    return est;
}

nlohmann::json to_json(const RunResult& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.per_step)
        steps.push_back({{"step", s.step},
                         {"pc", s.pc},
                         {"total_cc", s.total_cc},
                         {"duration_ns", round6(s.duration_ns)},
                         {"energy_pj", round6(s.energy_pj)},
                         {"avg_power_mw", round6(s.avg_power_mw)}});
    nlohmann::json instrs = nlohmann::json::array();
    for (const auto& i : r.per_instruction)
        instrs.push_back({{"pc", i.pc},
                          {"executions", i.executions},
                          {"cycles", i.cycles},
                          {"energy_pj", round6(i.energy_pj)},
                          {"avg_power_mw", round6(i.avg_power_mw)}});
    nlohmann::json ih = nlohmann::json::array();
    for (const auto& [pc, h] : r.instruction_heatmaps) {
        auto j = heatmap_json(h);
        j["pc"] = pc;
        ih.push_back(std::move(j));
    }
    return {
        {"schema", "cgra-estim-report/1"},
        {"run_id", r.id},
        {"kernel", {{"name", r.kernel_name}, {"digest", r.digests.kernel}}},
        {"architecture", {{"name", r.arch_name}, {"digest", r.digests.arch}}},
        {"characterization", {{"name", r.char_name}, {"digest", r.digests.characterization}}},
        {"memory", {{"initial_digest", r.digests.memory}, {"final_digest", r.digests.final_memory}}},
        {"fidelity_case", std::string(to_string(r.fidelity))},
        {"termination", std::string(to_string(r.termination))},
        {"steps", r.steps},
        {"latency", {{"cycles", r.latency_cc}, {"ns", round6(r.latency_ns)}}},
        {"energy_pj", round6(r.energy_pj)},
        {"avg_power_mw", round6(r.avg_power_mw)},
        {"energy_breakdown_pj",
         {{"decode", round6(r.breakdown.decode_pj)},
          {"active", round6(r.breakdown.active_pj)},
          {"idle", round6(r.breakdown.idle_pj)},
          {"switch", round6(r.breakdown.switch_pj)},
          {"operand_adder", round6(r.breakdown.operand_adder_pj)}}},
        {"per_step", std::move(steps)},
        {"per_instruction", std::move(instrs)},
        {"heatmaps", {{"kernel_energy", heatmap_json(r.energy_heatmap)}, {"instruction_avg_power", std::move(ih)}}},
        {"warnings", r.warnings},
    };
}

RunResult run_result_from_json(const nlohmann::json& j) {
    try {
        RunResult r;
        r.id = j.at("run_id").get<std::string>();
        r.kernel_name = j.at("kernel").at("name").get<std::string>();
        r.digests.kernel = j.at("kernel").at("digest").get<std::string>();
        r.arch_name = j.at("architecture").at("name").get<std::string>();
        r.digests.arch = j.at("architecture").at("digest").get<std::string>();
        r.char_name = j.at("characterization").at("name").get<std::string>();
        r.digests.characterization = j.at("characterization").at("digest").get<std::string>();
        r.digests.memory = j.at("memory").at("initial_digest").get<std::string>();
        r.digests.final_memory = j.at("memory").at("final_digest").get<std::string>();
        r.fidelity = fidelity_case_from_string(j.at("fidelity_case").get<std::string>());
        r.termination = termination_from_string(j.at("termination").get<std::string>());
        r.steps = j.at("steps").get<std::size_t>();
        r.latency_cc = j.at("latency").at("cycles").get<std::uint64_t>();
        r.latency_ns = j.at("latency").at("ns").get<double>();
        r.energy_pj = j.at("energy_pj").get<double>();
        r.avg_power_mw = j.at("avg_power_mw").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

RunResult load_run_result(const std::filesystem::path& path) {
    try {
        return run_result_from_json(detail::parse_json_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV projections

std::string timing_csv(const Estimate& est, const Architecture& arch) {
    std::string out = "step,pc,pe_row,pe_col,decode_cc,stall_cc,exec_cc,idle_cc,total_cc\n";
    for (std::size_t s = 0; s < est.timings.size(); ++s) {
        const auto& t = est.timings[s];
        for (int i = 0; i < arch.pe_count(); ++i) {
            const auto c = arch.coord_of(i);
            const auto& p = t.pes[static_cast<std::size_t>(i)];
            out += std::to_string(s) + ',' + std::to_string(est.trace.steps[s].pc) + ',' + std::to_string(c.row) +
                   ',' + std::to_string(c.col) + ',' + std::to_string(p.decode_cc) + ',' +
                   std::to_string(p.stall_cc) + ',' + std::to_string(p.exec_cc) + ',' + std::to_string(p.idle_cc) +
                   ',' + std::to_string(t.total_cc) + '\n';
        }
    }
    return out;
}

std::string energy_csv(const Estimate& est, const Architecture& arch) {
    std::string out =
        "step,pc,pe_row,pe_col,decode_cc,stall_cc,exec_cc,idle_cc,total_cc,"
        "decode_pj,active_pj,idle_pj,switch_pj,operand_adder_pj,total_pj\n";
    for (std::size_t s = 0; s < est.timings.size(); ++s) {
        const auto& t = est.timings[s];
        for (int i = 0; i < arch.pe_count(); ++i) {
            const auto c = arch.coord_of(i);
            const auto& p = t.pes[static_cast<std::size_t>(i)];
            const auto& e = est.energy.steps[s].pes[static_cast<std::size_t>(i)];
            out += std::to_string(s) + ',' + std::to_string(est.trace.steps[s].pc) + ',' + std::to_string(c.row) +
                   ',' + std::to_string(c.col) + ',' + std::to_string(p.decode_cc) + ',' +
                   std::to_string(p.stall_cc) + ',' + std::to_string(p.exec_cc) + ',' + std::to_string(p.idle_cc) +
                   ',' + std::to_string(t.total_cc) + ',' + fmt6(e.decode_pj) + ',' + fmt6(e.active_pj) + ',' +
                   fmt6(e.idle_pj) + ',' + fmt6(e.switch_pj) + ',' + fmt6(e.operand_adder_pj) + ',' +
                   fmt6(e.total_pj()) + '\n';
        }
    }
    return out;
}

std::string steps_csv(const RunResult& r) {
    std::string out = "step,pc,total_cc,duration_ns,energy_pj,avg_power_mw\n";
    for (const auto& s : r.per_step)
        out += std::to_string(s.step) + ',' + std::to_string(s.pc) + ',' + std::to_string(s.total_cc) + ',' +
               fmt6(s.duration_ns) + ',' + fmt6(s.energy_pj) + ',' + fmt6(s.avg_power_mw) + '\n';
    return out;
}

std::string heatmap_csv(const Heatmap& h) {
    std::string out = "# unit=" + std::string(to_string(h.unit)) + " scope=" + h.scope + "\n";
    for (int r = 0; r < h.rows; ++r) {
        for (int c = 0; c < h.cols; ++c) {
            if (c > 0) out += ',';
            out += fmt6(h.at(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_report(const Estimate& est, const Architecture& arch, const std::filesystem::path& dir,
                  const OutputFormats& formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_text(dir / "report.json", to_json(est.result).dump(2) + "\n");
    write_text(dir / "final_memory.txt", render_memory_image(est.final_memory));
    if (formats.csv) {
        write_text(dir / "timing.csv", timing_csv(est, arch));
        write_text(dir / "energy.csv", energy_csv(est, arch));
        write_text(dir / "steps.csv", steps_csv(est.result));
        write_text(dir / "heatmap_energy.csv", heatmap_csv(est.result.energy_heatmap));
        for (const auto& [pc, h] : est.result.instruction_heatmaps)
            write_text(dir / ("heatmap_instr_" + std::to_string(pc) + ".csv"), heatmap_csv(h));
    }
    if (formats.svg) {
        emit_heatmap_svg(est.result.energy_heatmap, dir / "heatmap_energy.svg");
        for (const auto& [pc, h] : est.result.instruction_heatmaps)
            emit_heatmap_svg(h, dir / ("heatmap_instr_" + std::to_string(pc) + ".svg"));
    }
}

}  // namespace cgra
