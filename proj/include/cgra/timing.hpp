#pragma once

/**
 * @file timing.hpp
 * @brief Instruction and kernel latency from a functional trace.
 *
 * Memory arbitration is a greedy, in-order reservation: requests are taken in
 * row-major PE order and each one starts at the earliest cycle at which both
 * its DMA channel and its memory bank are free, then holds both for the
 * access latency. There is no back-filling of earlier gaps.
 */

#include <cstdint>
#include <vector>

#include "cgra/arch.hpp"
#include "cgra/charmodel.hpp"
#include "cgra/sim.hpp"

namespace cgra {

struct AccessRequest {
    PECoord pe{};
    MemAccess::Kind kind{MemAccess::Kind::Load};
    std::uint64_t word_addr{0};
    std::uint32_t bank{0};
    std::uint32_t channel{0};
};

/// Builds a request with bank and channel derived from the architecture.
AccessRequest make_request(const Architecture& arch, PECoord pe, MemAccess::Kind kind, std::uint64_t word_addr);

/// Start cycle of each request, same order as `reqs`.
std::vector<std::uint64_t> schedule_memory_accesses(const std::vector<AccessRequest>& reqs,
                                                    const MemorySubsystem& mem, std::uint32_t latency_cc);

struct PETiming {
    std::uint64_t decode_cc{0};
    std::uint64_t stall_cc{0};
    std::uint64_t exec_cc{0};
    std::uint64_t idle_cc{0};
};

struct StepTiming {
    std::vector<PETiming> pes;  // row-major
    std::uint64_t total_cc{0};
};

StepTiming step_timing(const StepRecord& record, const Architecture& arch, const EffectiveModel& eff);

struct KernelLatency {
    std::uint64_t cycles{0};
    double ns{0.0};
};

std::vector<StepTiming> trace_timing(const Trace& trace, const Architecture& arch, const EffectiveModel& eff);
KernelLatency kernel_latency(const std::vector<StepTiming>& timings, const Architecture& arch);
KernelLatency kernel_latency(const Trace& trace, const Architecture& arch, const EffectiveModel& eff);

}  // namespace cgra
