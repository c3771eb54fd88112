#pragma once

/**
 * @file report.hpp
 * @brief End-to-end estimation runs, hardware sweeps, run comparisons and the
 *        report artifacts (JSON, CSV, SVG) they produce.
 *
 * report.json is the source of truth for a run; the CSV and SVG files are
 * projections of the same numbers. Every real number written anywhere is
 * formatted with 6 significant digits, so identical inputs produce
 * byte-identical files.
 */

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgra/arch.hpp"
#include "cgra/charmodel.hpp"
#include "cgra/kernel.hpp"
#include "cgra/power.hpp"
#include "cgra/sim.hpp"
#include "cgra/timing.hpp"

namespace cgra {

/// "%.6g" formatting shared by every artifact.
std::string fmt6(double v);
/// The value a reader of fmt6(v) recovers.
double round6(double v);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string digest(const MemoryImage& mem);

struct Digests {
    std::string kernel;
    std::string arch;
    std::string characterization;
    std::string memory;
    std::string final_memory;
};

struct StepRow {
    std::size_t step{0};
    std::size_t pc{0};
    std::uint64_t total_cc{0};
    double duration_ns{0.0};
    double energy_pj{0.0};
    double avg_power_mw{0.0};
};

struct InstructionRow {
    std::size_t pc{0};
    std::size_t executions{0};
    std::uint64_t cycles{0};
    double energy_pj{0.0};
    double avg_power_mw{0.0};
};

struct EnergyTotals {
    double decode_pj{0.0};
    double active_pj{0.0};
    double idle_pj{0.0};
    double switch_pj{0.0};
    double operand_adder_pj{0.0};
};

struct RunResult {
    std::string id;
    std::string kernel_name;
    std::string arch_name;
    std::string char_name;
    Digests digests;
    FidelityCase fidelity{FidelityCase::VI};
    Termination termination{Termination::Exited};
    std::size_t steps{0};
    std::uint64_t latency_cc{0};
    double latency_ns{0.0};
    double energy_pj{0.0};
    double avg_power_mw{0.0};
    EnergyTotals breakdown;
    std::vector<StepRow> per_step;
    std::vector<InstructionRow> per_instruction;
    Heatmap energy_heatmap;
    std::vector<std::pair<std::size_t, Heatmap>> instruction_heatmaps;
    std::vector<std::string> warnings;
};

/// A run together with the intermediate data it was computed from.
struct Estimate {
    RunResult result;
    Trace trace;
    std::vector<StepTiming> timings;
    KernelEnergy energy;
    MemoryImage final_memory;
};

struct EstimateOptions {
    FidelityCase fidelity{FidelityCase::VI};
    std::size_t max_steps{1'000'000};
    std::string id;  // defaults to the kernel name
};

Estimate estimate(const Kernel& kernel, const Architecture& arch, const CharacterizationModel& model,
                  const MemoryImage& mem0, const EstimateOptions& opts);

nlohmann::json to_json(const RunResult& run);
/// Reads the fields of a report.json needed for comparisons.
RunResult run_result_from_json(const nlohmann::json& j);
RunResult load_run_result(const std::filesystem::path& report_json);

struct OutputFormats {
    bool csv{true};
    bool svg{true};
};

/// Writes report.json, final_memory.txt and, per `formats`, CSV and SVG files into `dir`.
void write_report(const Estimate& est, const Architecture& arch, const std::filesystem::path& dir,
                  const OutputFormats& formats);

std::string timing_csv(const Estimate& est, const Architecture& arch);
std::string energy_csv(const Estimate& est, const Architecture& arch);
std::string steps_csv(const RunResult& run);
std::string heatmap_csv(const Heatmap& h);
std::string heatmap_svg(const Heatmap& h);
void emit_heatmap_svg(const Heatmap& h, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Comparisons

struct ComparisonRow {
    std::string id;
    std::uint64_t latency_cc{0};
    double latency_ns{0.0};
    double energy_pj{0.0};
    double avg_power_mw{0.0};
    double latency_ratio{1.0};
    double energy_ratio{1.0};
    double power_ratio{1.0};
    /// (baseline - variant) / baseline * 100
    double latency_reduction_pct{0.0};
    double energy_reduction_pct{0.0};
    double power_reduction_pct{0.0};
};

struct Comparison {
    std::string baseline_id;
    std::vector<ComparisonRow> rows;  // input order
    std::vector<std::string> warnings;
};

/// Throws ValidationError when `runs` is empty or the baseline id is absent.
Comparison compare_runs(const std::vector<RunResult>& runs, const std::string& baseline_id);
nlohmann::json to_json(const Comparison& c);
std::string comparison_csv(const Comparison& c);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepVariant {
    std::string name;
    nlohmann::json arch_patch = nlohmann::json::object();  // JSON merge patch onto the base architecture
    nlohmann::json char_patch = nlohmann::json::object();  // JSON merge patch onto the characterization
    std::map<std::string, double> op_power_scale;          // mnemonic -> factor, applied after char_patch
};

/// First variant is the baseline.
struct SweepSpec {
    std::filesystem::path base_arch;
    std::vector<SweepVariant> variants;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct SweepInputs {
    std::filesystem::path kernel;
    std::filesystem::path characterization;
    std::optional<std::filesystem::path> memory;
    SweepSpec spec;
    EstimateOptions options;
    unsigned jobs{1};
};

struct SweepVariantRun {
    std::string name;
    Architecture arch;
    CharacterizationModel model;
    Estimate estimate;
};

struct SweepResult {
    std::vector<SweepVariantRun> runs;  // spec order
    Comparison comparison;
};

SweepResult run_sweep(const SweepInputs& in);

}  // namespace cgra
