#pragma once

/**
 * @file sim.hpp
 * @brief Functional, untimed execution of a kernel on the PE grid.
 *
 * Execution rules for one step (one CGRA instruction):
 *   - every PE reads its operands from the state as it was before the step;
 *     neighbor sources return the neighbor's output register from the
 *     previous step, so the order PEs are visited in does not matter
 *   - all loads observe memory as it was before the step; stores commit
 *     afterwards, in row-major PE order (the last writer to an address wins)
 *   - next pc is the taken branch target, otherwise pc + 1
 *
 * Timing and power are computed later from the trace; nothing here depends
 * on the fidelity case.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgra/arch.hpp"
#include "cgra/kernel.hpp"

namespace cgra {

/// Word-addressed memory over the subsystem capacity; accessed with byte addresses.
class MemoryImage {
public:
    MemoryImage() = default;
    explicit MemoryImage(const Architecture& arch);

    int word_bytes() const { return word_bytes_; }
    std::size_t capacity_words() const { return words_.size(); }

    /// Throws MisalignedAddress or AddressOutOfRange.
    std::size_t word_index(std::int64_t byte_addr) const;
    std::int32_t read(std::int64_t byte_addr) const { return words_[word_index(byte_addr)]; }
    void write(std::int64_t byte_addr, std::int32_t value) { words_[word_index(byte_addr)] = value; }

    std::int32_t word(std::size_t index) const { return words_[index]; }
    const std::vector<std::int32_t>& words() const { return words_; }

    friend bool operator==(const MemoryImage&, const MemoryImage&) = default;

private:
    int word_bytes_{4};
    std::vector<std::int32_t> words_;
};

/// Parses "0xADDR: VALUE" lines (VALUE hex or decimal); duplicates keep the last
/// value and add a warning.
MemoryImage parse_memory_image(std::string_view text, const Architecture& arch,
                               std::vector<std::string>* warnings = nullptr);
MemoryImage load_memory_image(const std::filesystem::path& path, const Architecture& arch,
                              std::vector<std::string>* warnings = nullptr);
/// Nonzero words only, ascending address, in the same text format.
std::string render_memory_image(const MemoryImage& mem);

struct PEState {
    std::vector<std::int32_t> regs;
    std::int32_t out{0};
    std::optional<Opcode> last_opcode{};
};

struct MemAccess {
    enum class Kind : std::uint8_t { Load, Store };
    Kind kind{Kind::Load};
    std::uint32_t byte_addr{0};
};

struct PEStepRecord {
    Opcode op{Opcode::NOP};
    OperandSrc src_a{OperandSrc::ZERO};
    OperandSrc src_b{OperandSrc::ZERO};
    /// Number of operands the opcode consumes (0, 1 for LW, 2 otherwise).
    int operands_read{0};
    std::int32_t a{0};
    std::int32_t b{0};
    /// Value written to the output register, if any.
    std::optional<std::int32_t> result{};
    std::optional<MemAccess> mem{};
    /// Opcode differs from the one this PE executed in the previous step.
    bool switched{false};
};

struct StepRecord {
    std::size_t step_index{0};
    std::size_t pc{0};
    std::vector<PEStepRecord> pes;  // row-major, rows * cols entries
};

enum class Termination : std::uint8_t { Exited, MaxSteps };

struct Trace {
    std::vector<StepRecord> steps;
    Termination termination{Termination::MaxSteps};
    std::vector<std::string> warnings;
};

struct Machine {
    std::size_t pc{0};
    std::vector<PEState> pes;
    MemoryImage memory;
    bool exited{false};
    std::size_t steps_executed{0};

    Machine(const Architecture& arch, MemoryImage mem0);
    const PEState& pe(const Architecture& arch, PECoord c) const { return pes[arch.linear_index(c)]; }
};

int operands_read(Opcode op);

/// Executes the instruction at machine.pc. Throws SimError.
StepRecord step(Machine& machine, const Kernel& kernel, const Architecture& arch,
                std::vector<std::string>* warnings = nullptr);

struct RunOutput {
    Trace trace;
    Machine final_state;
};

RunOutput run(const Kernel& kernel, const Architecture& arch, MemoryImage mem0, std::size_t max_steps);

/// One JSON object per line, one line per step.
std::string trace_to_jsonl(const Trace& trace, const Architecture& arch);

}  // namespace cgra
