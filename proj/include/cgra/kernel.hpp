#pragma once

/**
 * @file kernel.hpp
 * @brief CGRA instruction set surface and the kernel text format.
 *
 * A kernel is an ordered list of instructions; each instruction holds one
 * operation slot per PE (row-major). All PEs share one program counter, so an
 * instruction may carry at most one control-flow operation.
 *
 * Text format, one instruction per block, blocks separated by a "---" line:
 *
 *     // comment
 *     SMUL R0, R1, -      ; SADD RCL, SELF, -  ; NOP ; LW R2, ZERO, R1 #4
 *     ...                 (rows lines, cols cells each)
 *
 * Cell grammar: `MNEMONIC [srcA, srcB, dest] [#imm]`. An empty cell is a NOP.
 * Omitted operands default to ZERO, ZERO, - and imm 0.
 */

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgra/arch.hpp"

namespace cgra {

enum class Opcode : std::uint8_t {
    NOP = 0,
    EXIT = 1,
    SADD = 2,
    SSUB = 3,
    SMUL = 4,
    SLT = 5,
    LAND = 6,
    LOR = 7,
    LXOR = 8,
    SLL = 9,
    SRL = 10,
    SRA = 11,
    LW = 12,
    SW = 13,
    BEQ = 14,
    BNE = 15,
    JUMP = 16,
};
inline constexpr std::size_t kOpcodeCount = 17;

enum class OperandSrc : std::uint8_t {
    ZERO = 0,
    IMM = 1,
    SELF = 2,
    R0 = 3,
    R1 = 4,
    R2 = 5,
    R3 = 6,
    RCL = 7,
    RCR = 8,
    RCT = 9,
    RCB = 10,
};
inline constexpr std::size_t kOperandSrcCount = 11;

/// OUT_ONLY writes just the output register; R0..R3 also write that register.
enum class Dest : std::uint8_t { OUT_ONLY = 0, R0 = 1, R1 = 2, R2 = 3, R3 = 4 };
inline constexpr std::size_t kDestCount = 5;

/// Operand-source classes used by the characterization's routing adders.
enum class SrcClass : std::uint8_t { None, Imm, Reg, Neighbor };

std::string_view mnemonic(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view s);
std::string_view to_string(OperandSrc s);
std::optional<OperandSrc> operand_src_from_string(std::string_view s);
std::string_view to_string(Dest d);
std::optional<Dest> dest_from_string(std::string_view s);

constexpr std::size_t index(Opcode op) { return static_cast<std::size_t>(op); }
inline constexpr std::array<Opcode, kOpcodeCount> kAllOpcodes = {
    Opcode::NOP, Opcode::EXIT, Opcode::SADD, Opcode::SSUB, Opcode::SMUL, Opcode::SLT,
    Opcode::LAND, Opcode::LOR, Opcode::LXOR, Opcode::SLL, Opcode::SRL, Opcode::SRA,
    Opcode::LW, Opcode::SW, Opcode::BEQ, Opcode::BNE, Opcode::JUMP};

bool is_control_flow(Opcode op);
bool is_memory(Opcode op);
/// NOP, EXIT and JUMP read no operands.
bool reads_operands(Opcode op);
SrcClass src_class(OperandSrc s);
/// Register index for R0..R3 sources, -1 otherwise.
int register_index(OperandSrc s);
int register_index(Dest d);
std::optional<Direction> neighbor_direction(OperandSrc s);

struct PESlot {
    Opcode op{Opcode::NOP};
    OperandSrc src_a{OperandSrc::ZERO};
    OperandSrc src_b{OperandSrc::ZERO};
    Dest dest{Dest::OUT_ONLY};
    std::int16_t imm{0};

    friend bool operator==(const PESlot&, const PESlot&) = default;
};

struct Instruction {
    int rows{0};
    int cols{0};
    std::vector<PESlot> slots;  // row-major, rows * cols entries

    Instruction() = default;
    Instruction(int r, int c) : rows(r), cols(c), slots(static_cast<std::size_t>(r * c)) {}

    PESlot& at(int row, int col) { return slots[static_cast<std::size_t>(row * cols + col)]; }
    const PESlot& at(int row, int col) const { return slots[static_cast<std::size_t>(row * cols + col)]; }

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Kernel {
    std::string name{"kernel"};
    std::vector<Instruction> instructions;

    std::size_t size() const { return instructions.size(); }
    /// Equality ignores the name: two kernels are equal when their code is.
    friend bool operator==(const Kernel& a, const Kernel& b) { return a.instructions == b.instructions; }
};

/**
 * Checks a kernel against an architecture. Throws ShapeError or
 * ValidationError; returns non-fatal warnings (currently: no EXIT reachable
 * from instruction 0).
 */
std::vector<std::string> validate_kernel(const Kernel& kernel, const Architecture& arch);

/// Parses kernel text; warnings from validation are appended to `warnings` when given.
Kernel parse_kernel(std::string_view text, const Architecture& arch, std::string name = "kernel",
                    std::vector<std::string>* warnings = nullptr);

Kernel load_kernel(const std::filesystem::path& path, const Architecture& arch,
                   std::vector<std::string>* warnings = nullptr);

std::string render_slot(const PESlot& slot);
/// Canonical text form; parse_kernel(render_kernel(k)) == k.
std::string render_kernel(const Kernel& kernel);

}  // namespace cgra
