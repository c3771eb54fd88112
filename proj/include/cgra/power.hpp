#pragma once

/**
 * @file power.hpp
 * @brief Per-PE, per-step and kernel energy from a trace and its timings.
 *
 * Below case V a PE draws its opcode power for the whole instruction. From
 * case V on the instruction is split into phases: decode, stall, execute and
 * idle. Stall and idle cycles are both billed at the idle power. Case VI adds
 * the datapath switch energy, the operand routing adders (one cycle's worth
 * per operand read) and the SMUL-by-zero power.
 */

#include <cstdint>
#include <string_view>
#include <vector>

#include "cgra/arch.hpp"
#include "cgra/charmodel.hpp"
#include "cgra/sim.hpp"
#include "cgra/timing.hpp"

namespace cgra {

struct PEEnergyBreakdown {
    double decode_pj{0.0};
    double active_pj{0.0};
    double idle_pj{0.0};
    double switch_pj{0.0};
    double operand_adder_pj{0.0};

    double total_pj() const { return decode_pj + active_pj + idle_pj + switch_pj + operand_adder_pj; }
};

enum class HeatmapUnit : std::uint8_t { AvgPowerMw, EnergyPj };
std::string_view to_string(HeatmapUnit u);

struct Heatmap {
    int rows{0};
    int cols{0};
    HeatmapUnit unit{HeatmapUnit::EnergyPj};
    std::string scope;
    std::vector<double> cells;  // row-major

    Heatmap() = default;
    Heatmap(int r, int c, HeatmapUnit u, std::string s)
        : rows(r), cols(c), unit(u), scope(std::move(s)), cells(static_cast<std::size_t>(r * c), 0.0) {}
    double& at(int r, int c) { return cells[static_cast<std::size_t>(r * cols + c)]; }
    double at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
    double sum() const;
    double max() const;
    double min() const;
};

/// Power the PE draws while executing its operation (case-dependent).
double operation_power_mw(const PEStepRecord& pe, const EffectiveModel& eff);

PEEnergyBreakdown pe_step_energy(const StepRecord& record, const StepTiming& timing, PECoord pe,
                                 const Architecture& arch, const EffectiveModel& eff);

struct StepEnergy {
    std::vector<PEEnergyBreakdown> pes;  // row-major
    double total_pj{0.0};
    double duration_ns{0.0};
};

struct KernelEnergy {
    std::vector<StepEnergy> steps;
    double total_pj{0.0};
    double total_ns{0.0};
    double avg_power_mw{0.0};
    Heatmap energy;  // per-PE energy over the whole kernel

    /// Per-PE average power during one step.
    Heatmap step_power_heatmap(std::size_t step, const Architecture& arch) const;
};

KernelEnergy kernel_energy(const Trace& trace, const std::vector<StepTiming>& timings, const Architecture& arch,
                           const EffectiveModel& eff);

/// Per-PE average power over every execution of static instruction `pc`.
Heatmap instruction_power_heatmap(const Trace& trace, const KernelEnergy& energy, std::size_t pc,
                                  const Architecture& arch);

}  // namespace cgra
