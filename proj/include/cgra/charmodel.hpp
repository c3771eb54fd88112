#pragma once

/**
 * @file charmodel.hpp
 * @brief Characterization profile and the fidelity ladder built on top of it.
 *
 * The ladder is cumulative. Each case enables every term of the previous one:
 *
 *   I    uniform latency and uniform power (the NOP power) for every operation
 *   II   per-opcode latency
 *   III  memory-bus contention (stalls while waiting for an access grant)
 *   IV   per-opcode power, flat over the instruction
 *   V    decode phase plus idle power once a PE has finished
 *   VI   datapath switch energy, operand-source adders, SMUL-by-zero power
 *
 * Units are fixed: mW, pJ, ns and clock cycles (cc). mW x ns = pJ.
 */

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cgra/kernel.hpp"

namespace cgra {

enum class FidelityCase : std::uint8_t { I = 1, II = 2, III = 3, IV = 4, V = 5, VI = 6 };

inline constexpr std::array<FidelityCase, 6> kAllCases = {FidelityCase::I,  FidelityCase::II, FidelityCase::III,
                                                          FidelityCase::IV, FidelityCase::V,  FidelityCase::VI};

std::string_view to_string(FidelityCase c);
/// Accepts "i".."vi" (any case) or "1".."6".
FidelityCase fidelity_case_from_string(std::string_view s);

struct SrcAdders {
    double imm_mw{0.0};
    double reg_mw{0.0};
    double neighbor_mw{0.0};

    double of(SrcClass c) const {
        switch (c) {
            case SrcClass::Imm: return imm_mw;
            case SrcClass::Reg: return reg_mw;
            case SrcClass::Neighbor: return neighbor_mw;
            case SrcClass::None: return 0.0;
        }
        return 0.0;
    }
};

struct CharacterizationModel {
    std::string name{"characterization"};
    std::uint32_t uniform_latency_cc{1};
    double uniform_power_mw{0.1};
    std::array<std::uint32_t, kOpcodeCount> op_latency_cc{};
    std::array<double, kOpcodeCount> op_power_mw{};
    double idle_power_mw{0.0};
    double decode_power_mw{0.0};
    std::uint32_t decode_cycles{0};
    double switch_energy_pj{0.0};
    SrcAdders src_power_adder_mw{};
    double mul_zero_power_mw{0.0};
};

/// Parameter set with the terms disabled by a fidelity case already collapsed.
struct EffectiveModel {
    FidelityCase fidelity{FidelityCase::I};
    std::uint32_t uniform_latency_cc{1};
    std::array<std::uint32_t, kOpcodeCount> op_latency_cc{};
    bool memory_contention{false};
    std::array<double, kOpcodeCount> op_power_mw{};
    /// False below case V: power is flat at the opcode power for the whole instruction.
    bool phased_power{false};
    double idle_power_mw{0.0};
    double decode_power_mw{0.0};
    std::uint32_t decode_cycles{0};
    double switch_energy_pj{0.0};
    SrcAdders src_power_adder_mw{};
    bool mul_zero_enabled{false};
    double mul_zero_power_mw{0.0};
};

/// Collects every problem, then throws LintError if any was found.
void lint(const CharacterizationModel& model);

CharacterizationModel characterization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CharacterizationModel& model);
CharacterizationModel load_characterization(const std::filesystem::path& path);

EffectiveModel resolve(const CharacterizationModel& model, FidelityCase fidelity);

}  // namespace cgra
