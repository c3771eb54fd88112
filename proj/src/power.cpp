#include "cgra/power.hpp"

#include <algorithm>
#include <numeric>

namespace cgra {

std::string_view to_string(HeatmapUnit u) {
    return u == HeatmapUnit::AvgPowerMw ? "avg_power_mw" : "energy_pj";
}

double Heatmap::sum() const { return std::accumulate(cells.begin(), cells.end(), 0.0); }
double Heatmap::max() const { return cells.empty() ? 0.0 : *std::max_element(cells.begin(), cells.end()); }
double Heatmap::min() const { return cells.empty() ? 0.0 : *std::min_element(cells.begin(), cells.end()); }

double operation_power_mw(const PEStepRecord& pe, const EffectiveModel& eff) {
    if (eff.mul_zero_enabled && pe.op == Opcode::SMUL && (pe.a == 0 || pe.b == 0)) return eff.mul_zero_power_mw;
    return eff.op_power_mw[index(pe.op)];
}

PEEnergyBreakdown pe_step_energy(const StepRecord& record, const StepTiming& timing, PECoord pe,
                                 const Architecture& arch, const EffectiveModel& eff) {
    const auto i = static_cast<std::size_t>(arch.linear_index(pe));
    const PEStepRecord& pr = record.pes[i];
    const PETiming& pt = timing.pes[i];
    const double clk = arch.clock_period_ns;
    const double p_op = operation_power_mw(pr, eff);

    PEEnergyBreakdown e;
    if (!eff.phased_power) {
        e.active_pj = p_op * static_cast<double>(timing.total_cc) * clk;
        return e;
    }
    e.decode_pj = eff.decode_power_mw * static_cast<double>(pt.decode_cc) * clk;
    e.active_pj = p_op * static_cast<double>(pt.exec_cc) * clk;
    e.idle_pj = eff.idle_power_mw * static_cast<double>(pt.stall_cc + pt.idle_cc) * clk;
    if (eff.fidelity >= FidelityCase::VI) {
        e.switch_pj = pr.switched ? eff.switch_energy_pj : 0.0;
        double adders = 0.0;
        if (pr.operands_read >= 1) adders += eff.src_power_adder_mw.of(src_class(pr.src_a));
        if (pr.operands_read >= 2) adders += eff.src_power_adder_mw.of(src_class(pr.src_b));
        e.operand_adder_pj = adders * clk;
    }
    return e;
}

KernelEnergy kernel_energy(const Trace& trace, const std::vector<StepTiming>& timings, const Architecture& arch,
                           const EffectiveModel& eff) {
    KernelEnergy k;
    k.energy = Heatmap(arch.rows, arch.cols, HeatmapUnit::EnergyPj, "kernel");
    k.steps.reserve(trace.steps.size());
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        StepEnergy se;
        se.pes.reserve(static_cast<std::size_t>(arch.pe_count()));
        se.duration_ns = static_cast<double>(timings[s].total_cc) * arch.clock_period_ns;
        for (int i = 0; i < arch.pe_count(); ++i) {
            const PECoord c = arch.coord_of(i);
            se.pes.push_back(pe_step_energy(trace.steps[s], timings[s], c, arch, eff));
            const double t = se.pes.back().total_pj();
            se.total_pj += t;
            k.energy.at(c.row, c.col) += t;
        }
        k.total_pj += se.total_pj;
        k.total_ns += se.duration_ns;
        k.steps.push_back(std::move(se));
    }
    k.avg_power_mw = k.total_ns > 0.0 ? k.total_pj / k.total_ns : 0.0;
    return k;
}

Heatmap KernelEnergy::step_power_heatmap(std::size_t step, const Architecture& arch) const {
    Heatmap h(arch.rows, arch.cols, HeatmapUnit::AvgPowerMw, "step " + std::to_string(step));
    const auto& se = steps.at(step);
    for (int i = 0; i < arch.pe_count(); ++i) {
        const PECoord c = arch.coord_of(i);
        h.at(c.row, c.col) = se.duration_ns > 0.0 ? se.pes[static_cast<std::size_t>(i)].total_pj() / se.duration_ns : 0.0;
    }
    return h;
}

Heatmap instruction_power_heatmap(const Trace& trace, const KernelEnergy& energy, std::size_t pc,
                                  const Architecture& arch) {
    Heatmap h(arch.rows, arch.cols, HeatmapUnit::AvgPowerMw, "instruction " + std::to_string(pc));
    double time_ns = 0.0;
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        if (trace.steps[s].pc != pc) continue;
        time_ns += energy.steps[s].duration_ns;
        for (int i = 0; i < arch.pe_count(); ++i) {
            const PECoord c = arch.coord_of(i);
            h.at(c.row, c.col) += energy.steps[s].pes[static_cast<std::size_t>(i)].total_pj();
        }
    }
    if (time_ns > 0.0)
        for (auto& v : h.cells) v /= time_ns;
    return h;
}

}  // namespace cgra
