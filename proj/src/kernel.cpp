#include "cgra/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>

#include "cgra/errors.hpp"
#include "json_util.hpp"

namespace cgra {

namespace {

constexpr std::array<std::string_view, kOpcodeCount> kMnemonics = {
    "NOP", "EXIT", "SADD", "SSUB", "SMUL", "SLT", "LAND", "LOR", "LXOR",
    "SLL", "SRL", "SRA", "LW", "SW", "BEQ", "BNE", "JUMP"};

constexpr std::array<std::string_view, kOperandSrcCount> kSrcNames = {
    "ZERO", "IMM", "SELF", "R0", "R1", "R2", "R3", "RCL", "RCR", "RCT", "RCB"};

constexpr std::array<std::string_view, kDestCount> kDestNames = {"-", "R0", "R1", "R2", "R3"};

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

}  // namespace

std::string_view mnemonic(Opcode op) { return kMnemonics[index(op)]; }

std::optional<Opcode> opcode_from_mnemonic(std::string_view s) {
    const std::string u = upper(s);
    for (std::size_t i = 0; i < kMnemonics.size(); ++i)
        if (kMnemonics[i] == u) return static_cast<Opcode>(i);
    return std::nullopt;
}

std::string_view to_string(OperandSrc s) { return kSrcNames[static_cast<std::size_t>(s)]; }

std::optional<OperandSrc> operand_src_from_string(std::string_view s) {
    const std::string u = upper(s);
    for (std::size_t i = 0; i < kSrcNames.size(); ++i)
        if (kSrcNames[i] == u) return static_cast<OperandSrc>(i);
    return std::nullopt;
}

std::string_view to_string(Dest d) { return kDestNames[static_cast<std::size_t>(d)]; }

std::optional<Dest> dest_from_string(std::string_view s) {
    const std::string u = upper(s);
    for (std::size_t i = 0; i < kDestNames.size(); ++i)
        if (kDestNames[i] == u) return static_cast<Dest>(i);
    return std::nullopt;
}

bool is_control_flow(Opcode op) {
    return op == Opcode::BEQ || op == Opcode::BNE || op == Opcode::JUMP || op == Opcode::EXIT;
}

bool is_memory(Opcode op) { return op == Opcode::LW || op == Opcode::SW; }

bool reads_operands(Opcode op) { return op != Opcode::NOP && op != Opcode::EXIT && op != Opcode::JUMP; }

SrcClass src_class(OperandSrc s) {
    switch (s) {
        case OperandSrc::ZERO:
        case OperandSrc::SELF: return SrcClass::None;
        case OperandSrc::IMM: return SrcClass::Imm;
        case OperandSrc::R0:
        case OperandSrc::R1:
        case OperandSrc::R2:
        case OperandSrc::R3: return SrcClass::Reg;
        case OperandSrc::RCL:
        case OperandSrc::RCR:
        case OperandSrc::RCT:
        case OperandSrc::RCB: return SrcClass::Neighbor;
    }
    return SrcClass::None;
}

int register_index(OperandSrc s) {
    const auto v = static_cast<int>(s);
    const auto r0 = static_cast<int>(OperandSrc::R0);
    return (v >= r0 && v <= static_cast<int>(OperandSrc::R3)) ? v - r0 : -1;
}

int register_index(Dest d) { return d == Dest::OUT_ONLY ? -1 : static_cast<int>(d) - 1; }

std::optional<Direction> neighbor_direction(OperandSrc s) {
    switch (s) {
        case OperandSrc::RCL: return Direction::Left;
        case OperandSrc::RCR: return Direction::Right;
        case OperandSrc::RCT: return Direction::Top;
        case OperandSrc::RCB: return Direction::Bottom;
        default: return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate_kernel(const Kernel& kernel, const Architecture& arch) {
    if (kernel.instructions.empty()) throw ValidationError("instructions", "kernel has no instructions");
    const std::size_t n = kernel.size();
    std::vector<std::string> warnings;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& ins = kernel.instructions[i];
        const std::string where = "instruction[" + std::to_string(i) + "]";
        if (ins.rows != arch.rows || ins.cols != arch.cols ||
            ins.slots.size() != static_cast<std::size_t>(arch.pe_count()))
            throw ShapeError(where + ": grid is " + std::to_string(ins.rows) + "x" + std::to_string(ins.cols) +
                             ", architecture is " + std::to_string(arch.rows) + "x" + std::to_string(arch.cols));

        int control = 0;
        for (int r = 0; r < ins.rows; ++r) {
            for (int c = 0; c < ins.cols; ++c) {
                const PESlot& s = ins.at(r, c);
                const std::string cell = where + ".PE(" + std::to_string(r) + "," + std::to_string(c) + ")";
                if (index(s.op) >= kOpcodeCount) throw ValidationError(cell, "reserved opcode");
                if (is_control_flow(s.op)) ++control;
                if (s.op == Opcode::BEQ || s.op == Opcode::BNE || s.op == Opcode::JUMP) {
                    if (s.imm < 0 || static_cast<std::size_t>(s.imm) >= n)
                        throw ValidationError(cell, "branch target " + std::to_string(s.imm) +
                                                        " outside kernel of " + std::to_string(n) + " instructions");
                }
                for (OperandSrc src : {s.src_a, s.src_b}) {
                    if (static_cast<std::size_t>(src) >= kOperandSrcCount)
                        throw ValidationError(cell, "reserved operand source");
                    if (register_index(src) >= arch.registers_per_pe)
                        throw ValidationError(cell, std::string(to_string(src)) + " exceeds registers_per_pe=" +
                                                        std::to_string(arch.registers_per_pe));
                }
                if (static_cast<std::size_t>(s.dest) >= kDestCount)
                    throw ValidationError(cell, "reserved destination");
                if (register_index(s.dest) >= arch.registers_per_pe)
                    throw ValidationError(cell, "destination " + std::string(to_string(s.dest)) +
                                                    " exceeds registers_per_pe=" +
                                                    std::to_string(arch.registers_per_pe));
            }
        }
        if (control > 1)
            throw ValidationError(where, "more than one control-flow operation; PEs share one program counter");
    }

    // Reachability from instruction 0 over the static control-flow graph.
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> work{0};
    seen[0] = true;
    bool exit_reachable = false;
    while (!work.empty()) {
        const std::size_t pc = work.front();
        work.pop_front();
        std::vector<std::size_t> next;
        bool falls_through = true;
        for (const auto& s : kernel.instructions[pc].slots) {
            if (s.op == Opcode::EXIT) {
                exit_reachable = true;
                falls_through = false;
            } else if (s.op == Opcode::JUMP) {
                next.push_back(static_cast<std::size_t>(s.imm));
                falls_through = false;
            } else if (s.op == Opcode::BEQ || s.op == Opcode::BNE) {
                next.push_back(static_cast<std::size_t>(s.imm));
            }
        }
        if (falls_through && pc + 1 < n) next.push_back(pc + 1);
        for (auto t : next) {
            if (!seen[t]) {
                seen[t] = true;
                work.push_back(t);
            }
        }
    }
    if (!exit_reachable)
        warnings.push_back("kernel '" + kernel.name + "': no EXIT reachable from instruction 0");
    return warnings;
}

// ---------------------------------------------------------------------------
// Text parsing

namespace {

struct Token {
    std::string_view text;
    std::size_t col;  // 1-based column in the source line
};

Token trim(std::string_view s, std::size_t col) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return {s.substr(b, e - b), col + b};
}

std::vector<Token> split(std::string_view s, char sep, std::size_t col) {
    std::vector<Token> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start), col + start));
            start = i + 1;
        }
    }
    return out;
}

std::int16_t parse_imm(Token tok, std::size_t line) {
    std::string_view t = tok.text;
    if (t.empty()) throw SyntaxError(line, tok.col, "missing immediate after '#'");
    bool neg = false;
    std::size_t pos = 0;
    if (t[0] == '-' || t[0] == '+') {
        neg = t[0] == '-';
        pos = 1;
    }
    int base = 10;
    if (t.size() > pos + 1 && t[pos] == '0' && (t[pos + 1] == 'x' || t[pos + 1] == 'X')) {
        base = 16;
        pos += 2;
    }
    const std::string_view digits = t.substr(pos);
    std::int64_t value = 0;
    const auto* first = digits.data();
    const auto* last = digits.data() + digits.size();
    auto [ptr, ec] = std::from_chars(first, last, value, base);
    if (digits.empty() || ec != std::errc() || ptr != last)
        throw SyntaxError(line, tok.col, "malformed immediate '" + std::string(t) + "'");
    if (neg) value = -value;
    // Hex literals may spell the 16-bit two's-complement pattern directly.
    if (base == 16 && !neg && value > 0x7FFF && value <= 0xFFFF) value -= 0x10000;
    if (value < -32768 || value > 32767)
        throw SyntaxError(line, tok.col, "immediate '" + std::string(t) + "' does not fit in 16 bits");
    return static_cast<std::int16_t>(value);
}

PESlot parse_cell(Token cell, std::size_t line) {
    PESlot slot;
    if (cell.text.empty()) return slot;

    std::string_view body = cell.text;
    std::optional<Token> imm_tok;
    if (auto hash = body.find('#'); hash != std::string_view::npos) {
        imm_tok = trim(body.substr(hash + 1), cell.col + hash + 1);
        body = body.substr(0, hash);
    }

    std::size_t i = 0;
    while (i < body.size() && std::isalpha(static_cast<unsigned char>(body[i]))) ++i;
    const std::string_view mn = body.substr(0, i);
    if (mn.empty()) throw SyntaxError(line, cell.col, "expected a mnemonic");
    const auto op = opcode_from_mnemonic(mn);
    if (!op) throw SyntaxError(line, cell.col, "unknown mnemonic '" + std::string(mn) + "'");
    slot.op = *op;

    const Token rest = trim(body.substr(i), cell.col + i);
    if (!rest.text.empty()) {
        if (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i])))
            throw SyntaxError(line, cell.col + i, "expected whitespace after mnemonic");
        const auto ops = split(rest.text, ',', rest.col);
        if (ops.size() != 3)
            throw SyntaxError(line, rest.col, "expected 'srcA, srcB, dest', got " + std::to_string(ops.size()) +
                                                  " operand(s)");
        const auto a = operand_src_from_string(ops[0].text);
        if (!a) throw SyntaxError(line, ops[0].col, "unknown source '" + std::string(ops[0].text) + "'");
        const auto b = operand_src_from_string(ops[1].text);
        if (!b) throw SyntaxError(line, ops[1].col, "unknown source '" + std::string(ops[1].text) + "'");
        const auto d = dest_from_string(ops[2].text);
        if (!d) throw SyntaxError(line, ops[2].col, "unknown destination '" + std::string(ops[2].text) + "'");
        slot.src_a = *a;
        slot.src_b = *b;
        slot.dest = *d;
    }
    if (imm_tok) slot.imm = parse_imm(*imm_tok, line);
    return slot;
}

}  // namespace

Kernel parse_kernel(std::string_view text, const Architecture& arch, std::string name,
                    std::vector<std::string>* warnings) {
    Kernel kernel;
    kernel.name = std::move(name);

    Instruction current(arch.rows, arch.cols);
    int row = 0;
    std::size_t block_start_line = 1;
    std::size_t line_no = 0;
    std::size_t pos = 0;

    auto close_block = [&](bool at_end) {
        if (row == 0) {
            if (at_end && !kernel.instructions.empty()) return;
            throw ShapeError("instruction starting at line " + std::to_string(block_start_line) + " has no rows");
        }
        if (row != arch.rows)
            throw ShapeError("instruction starting at line " + std::to_string(block_start_line) + " has " +
                             std::to_string(row) + " rows, architecture has " + std::to_string(arch.rows));
        kernel.instructions.push_back(std::move(current));
        current = Instruction(arch.rows, arch.cols);
        row = 0;
    };

    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (auto c = raw.find("//"); c != std::string_view::npos) raw = raw.substr(0, c);
        const Token line = trim(raw, 1);
        if (line.text.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        if (line.text == "---") {
            close_block(false);
            block_start_line = line_no + 1;
        } else {
            if (row == 0) block_start_line = line_no;
            if (row >= arch.rows)
                throw ShapeError("line " + std::to_string(line_no) + ": instruction has more than " +
                                 std::to_string(arch.rows) + " rows");
            auto cells = split(raw, ';', 1);
            if (cells.size() == static_cast<std::size_t>(arch.cols) + 1 && cells.back().text.empty())
                cells.pop_back();
            if (cells.size() != static_cast<std::size_t>(arch.cols))
                throw ShapeError("line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                                 " cells, architecture has " + std::to_string(arch.cols) + " columns");
            for (int c = 0; c < arch.cols; ++c)
                current.at(row, c) = parse_cell(cells[static_cast<std::size_t>(c)], line_no);
            ++row;
        }
        if (eol == text.size()) break;
    }
    close_block(true);

    auto w = validate_kernel(kernel, arch);
    if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
    return kernel;
}

Kernel load_kernel(const std::filesystem::path& path, const Architecture& arch, std::vector<std::string>* warnings) {
    const std::string text = detail::read_text_file(path);
    try {
        return parse_kernel(text, arch, path.stem().string(), warnings);
    } catch (const SyntaxError& e) {
        throw SyntaxError(path.string(), e);
    } catch (const ShapeError& e) {
        throw ShapeError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(e.field(), path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_slot(const PESlot& s) {
    std::string out(mnemonic(s.op));
    const bool default_operands =
        s.src_a == OperandSrc::ZERO && s.src_b == OperandSrc::ZERO && s.dest == Dest::OUT_ONLY;
    if (!default_operands) {
        out += ' ';
        out += to_string(s.src_a);
        out += ", ";
        out += to_string(s.src_b);
        out += ", ";
        out += to_string(s.dest);
    }
    if (s.imm != 0) out += " #" + std::to_string(s.imm);
    return out;
}

std::string render_kernel(const Kernel& kernel) {
    std::string out = "// kernel: " + kernel.name + "\n";
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        if (i > 0) out += "---\n";
        out += "// instruction " + std::to_string(i) + "\n";
        const auto& ins = kernel.instructions[i];
        for (int r = 0; r < ins.rows; ++r) {
            for (int c = 0; c < ins.cols; ++c) {
                if (c > 0) out += " ; ";
                out += render_slot(ins.at(r, c));
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace cgra
