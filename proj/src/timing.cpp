#include "cgra/timing.hpp"

#include <algorithm>
#include <unordered_map>

namespace cgra {

AccessRequest make_request(const Architecture& arch, PECoord pe, MemAccess::Kind kind, std::uint64_t word_addr) {
    AccessRequest r;
    r.pe = pe;
    r.kind = kind;
    r.word_addr = word_addr;
    r.bank = bank_of(arch.mem, word_addr);
    r.channel = arch.mem.dma == DmaKind::PerColumn ? static_cast<std::uint32_t>(pe.col)
                                                   : static_cast<std::uint32_t>(arch.linear_index(pe));
    return r;
}

std::vector<std::uint64_t> schedule_memory_accesses(const std::vector<AccessRequest>& reqs,
                                                    const MemorySubsystem& mem, std::uint32_t latency_cc) {
    std::unordered_map<std::uint32_t, std::uint64_t> channel_free;
    std::unordered_map<std::uint32_t, std::uint64_t> bank_free;
    std::vector<std::uint64_t> starts;
    starts.reserve(reqs.size());
    for (const auto& r : reqs) {
        // A 1-to-M bus is a single channel-and-bank resource.
        const std::uint32_t bank = mem.bus == BusKind::OneToM ? 0U : r.bank;
        auto& ch = channel_free[r.channel];
        auto& bk = bank_free[bank];
        const std::uint64_t start = std::max(ch, bk);
        ch = bk = start + latency_cc;
        starts.push_back(start);
    }
    return starts;
}

StepTiming step_timing(const StepRecord& record, const Architecture& arch, const EffectiveModel& eff) {
    const auto n = record.pes.size();
    StepTiming t;
    t.pes.resize(n);

    if (eff.fidelity == FidelityCase::I) {
        for (auto& p : t.pes) p.exec_cc = eff.uniform_latency_cc;
        t.total_cc = eff.uniform_latency_cc;
        return t;
    }

    const std::uint64_t decode = eff.phased_power ? eff.decode_cycles : 0;
    std::vector<AccessRequest> reqs;
    std::vector<std::size_t> req_pe;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& pr = record.pes[i];
        auto& pt = t.pes[i];
        pt.decode_cc = decode;
        std::uint64_t lat = eff.op_latency_cc[index(pr.op)];
        if (pr.op == Opcode::SMUL && arch.mul_latency_cc) lat = *arch.mul_latency_cc;
        pt.exec_cc = lat;
        if (eff.memory_contention && pr.mem) {
            const auto c = arch.coord_of(static_cast<int>(i));
            reqs.push_back(make_request(arch, c, pr.mem->kind, pr.mem->byte_addr / static_cast<std::uint32_t>(arch.word_bytes)));
            req_pe.push_back(i);
        }
    }

    if (!reqs.empty()) {
        const std::uint32_t L = arch.mem.access_latency_cc();
        const auto starts = schedule_memory_accesses(reqs, arch.mem, L);
        for (std::size_t k = 0; k < reqs.size(); ++k) {
            auto& pt = t.pes[req_pe[k]];
            pt.stall_cc = starts[k];
            pt.exec_cc = L;
        }
    }

    std::uint64_t total = 0;
    for (const auto& p : t.pes) total = std::max(total, p.decode_cc + p.stall_cc + p.exec_cc);
    t.total_cc = total;
    for (auto& p : t.pes) p.idle_cc = total - (p.decode_cc + p.stall_cc + p.exec_cc);
    return t;
}

std::vector<StepTiming> trace_timing(const Trace& trace, const Architecture& arch, const EffectiveModel& eff) {
    std::vector<StepTiming> out;
    out.reserve(trace.steps.size());
    for (const auto& s : trace.steps) out.push_back(step_timing(s, arch, eff));
    return out;
}

KernelLatency kernel_latency(const std::vector<StepTiming>& timings, const Architecture& arch) {
    KernelLatency k;
    for (const auto& t : timings) k.cycles += t.total_cc;
    k.ns = static_cast<double>(k.cycles) * arch.clock_period_ns;
    return k;
}

KernelLatency kernel_latency(const Trace& trace, const Architecture& arch, const EffectiveModel& eff) {
    return kernel_latency(trace_timing(trace, arch, eff), arch);
}

}  // namespace cgra
