#include "cgra/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "cgra/errors.hpp"
#include "json_util.hpp"

namespace cgra {

// ---------------------------------------------------------------------------
// Memory image

MemoryImage::MemoryImage(const Architecture& arch)
    : word_bytes_(arch.word_bytes), words_(static_cast<std::size_t>(arch.mem.capacity_words()), 0) {}

std::size_t MemoryImage::word_index(std::int64_t byte_addr) const {
    if (byte_addr % word_bytes_ != 0)
        throw MisalignedAddress("byte address " + std::to_string(byte_addr) + " is not a multiple of " +
                                std::to_string(word_bytes_));
    if (byte_addr < 0 || static_cast<std::uint64_t>(byte_addr / word_bytes_) >= words_.size())
        throw AddressOutOfRange("byte address " + std::to_string(byte_addr) + " outside memory of " +
                                std::to_string(words_.size() * static_cast<std::size_t>(word_bytes_)) + " bytes");
    return static_cast<std::size_t>(byte_addr / word_bytes_);
}

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<std::int64_t> parse_integer(std::string_view t) {
    bool neg = false;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
        neg = t[0] == '-';
        t.remove_prefix(1);
    }
    int base = 10;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
        base = 16;
        t.remove_prefix(2);
    }
    if (t.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v, base);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return neg ? -v : v;
}

}  // namespace

MemoryImage parse_memory_image(std::string_view text, const Architecture& arch, std::vector<std::string>* warnings) {
    MemoryImage mem(arch);
    std::map<std::size_t, std::size_t> first_line;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto c = line.find("//"); c != std::string_view::npos) line = line.substr(0, c);
        if (auto c = line.find('#'); c != std::string_view::npos) line = line.substr(0, c);
        line = trim_view(line);
        if (line.empty()) continue;

        const auto colon = line.find(':');
        if (colon == std::string_view::npos)
            throw ParseError("memory image line " + std::to_string(line_no) + ": expected 'ADDR: VALUE'");
        const auto addr = parse_integer(trim_view(line.substr(0, colon)));
        const auto value = parse_integer(trim_view(line.substr(colon + 1)));
        if (!addr) throw ParseError("memory image line " + std::to_string(line_no) + ": malformed address");
        if (!value || *value < std::numeric_limits<std::int32_t>::min() || *value > 0xFFFFFFFFLL)
            throw ParseError("memory image line " + std::to_string(line_no) + ": malformed 32-bit value");

        std::size_t idx = 0;
        try {
            idx = mem.word_index(*addr);
        } catch (const MisalignedAddress& e) {
            throw MisalignedAddress("memory image line " + std::to_string(line_no) + ": " + e.what());
        } catch (const AddressOutOfRange& e) {
            throw AddressOutOfRange("memory image line " + std::to_string(line_no) + ": " + e.what());
        }
        if (auto [it, fresh] = first_line.emplace(idx, line_no); !fresh && warnings)
            warnings->push_back("memory image line " + std::to_string(line_no) + ": address 0x" +
                                [&] {
                                    char buf[32];
                                    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(*addr));
                                    return std::string(buf);
                                }() +
                                " repeats line " + std::to_string(it->second) + "; last value wins");
        mem.write(*addr, static_cast<std::int32_t>(static_cast<std::uint32_t>(*value & 0xFFFFFFFF)));
    }
    return mem;
}

MemoryImage load_memory_image(const std::filesystem::path& path, const Architecture& arch,
                              std::vector<std::string>* warnings) {
    const std::string text = detail::read_text_file(path);
    try {
        return parse_memory_image(text, arch, warnings);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string render_memory_image(const MemoryImage& mem) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < mem.capacity_words(); ++i) {
        if (mem.word(i) == 0) continue;
        std::snprintf(buf, sizeof buf, "0x%llx: %d\n",
                      static_cast<unsigned long long>(i * static_cast<std::size_t>(mem.word_bytes())), mem.word(i));
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

Machine::Machine(const Architecture& arch, MemoryImage mem0) : memory(std::move(mem0)) {
    pes.resize(static_cast<std::size_t>(arch.pe_count()));
    for (auto& pe : pes) pe.regs.assign(static_cast<std::size_t>(arch.registers_per_pe), 0);
}

int operands_read(Opcode op) {
    if (!reads_operands(op)) return 0;
    return op == Opcode::LW ? 1 : 2;
}

namespace {

std::int32_t wrap(std::int64_t v) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(v & 0xFFFFFFFF)); }

std::int32_t operand_value(const Machine& m, const Architecture& arch, PECoord at, OperandSrc src, std::int16_t imm) {
    const PEState& self = m.pe(arch, at);
    switch (src) {
        case OperandSrc::ZERO: return 0;
        case OperandSrc::IMM: return imm;
        case OperandSrc::SELF: return self.out;
        case OperandSrc::R0:
        case OperandSrc::R1:
        case OperandSrc::R2:
        case OperandSrc::R3: return self.regs[static_cast<std::size_t>(register_index(src))];
        case OperandSrc::RCL:
        case OperandSrc::RCR:
        case OperandSrc::RCT:
        case OperandSrc::RCB: {
            // Without wrap-around links an edge PE reads 0 from the missing side.
            const auto n = neighbor_of(arch, at, *neighbor_direction(src));
            return n ? m.pe(arch, *n).out : 0;
        }
    }
    return 0;
}

std::int32_t alu(Opcode op, std::int32_t a, std::int32_t b) {
    const auto ua = static_cast<std::uint32_t>(a);
    const auto ub = static_cast<std::uint32_t>(b);
    const unsigned sh = ub & 31U;
    switch (op) {
        case Opcode::SADD: return wrap(static_cast<std::int64_t>(ua) + ub);
        case Opcode::SSUB: return wrap(static_cast<std::int64_t>(ua) - ub);
        case Opcode::SMUL: return wrap(static_cast<std::int64_t>(a) * b);
        case Opcode::SLT: return a < b ? 1 : 0;
        case Opcode::LAND: return static_cast<std::int32_t>(ua & ub);
        case Opcode::LOR: return static_cast<std::int32_t>(ua | ub);
        case Opcode::LXOR: return static_cast<std::int32_t>(ua ^ ub);
        case Opcode::SLL: return static_cast<std::int32_t>(ua << sh);
        case Opcode::SRL: return static_cast<std::int32_t>(ua >> sh);
        case Opcode::SRA: return a >> sh;  // arithmetic for signed operands (C++20)
        default: return 0;
    }
}

}  // namespace

StepRecord step(Machine& m, const Kernel& kernel, const Architecture& arch, std::vector<std::string>* warnings) {
    const std::size_t n = kernel.size();
    const Instruction& ins = kernel.instructions.at(m.pc);
    const std::size_t step_idx = m.steps_executed;

    StepRecord rec;
    rec.step_index = step_idx;
    rec.pc = m.pc;
    rec.pes.resize(static_cast<std::size_t>(arch.pe_count()));

    struct PendingWrite {
        int pe;
        std::optional<std::int32_t> out;
        int reg{-1};
    };
    struct PendingStore {
        int pe;
        std::int64_t addr;
        std::int32_t value;
    };
    std::vector<PendingWrite> writes;
    std::vector<PendingStore> stores;
    std::optional<std::size_t> next_pc;
    bool exit_now = false;

    auto fault = [&](SimFault f, PECoord at, const std::string& what) -> SimError {
        return SimError(f, step_idx, at.row, at.col, what);
    };

    for (int i = 0; i < arch.pe_count(); ++i) {
        const PECoord at = arch.coord_of(i);
        const PESlot& slot = ins.slots[static_cast<std::size_t>(i)];
        PEStepRecord& pr = rec.pes[static_cast<std::size_t>(i)];
        const PEState& st = m.pes[static_cast<std::size_t>(i)];

        pr.op = slot.op;
        pr.src_a = slot.src_a;
        pr.src_b = slot.src_b;
        pr.operands_read = operands_read(slot.op);
        pr.switched = st.last_opcode.has_value() && *st.last_opcode != slot.op;
        if (pr.operands_read >= 1) pr.a = operand_value(m, arch, at, slot.src_a, slot.imm);
        if (pr.operands_read >= 2) pr.b = operand_value(m, arch, at, slot.src_b, slot.imm);

        switch (slot.op) {
            case Opcode::NOP: break;
            case Opcode::EXIT: exit_now = true; break;
            case Opcode::JUMP: next_pc = static_cast<std::size_t>(slot.imm); break;
            case Opcode::BEQ:
                if (pr.a == pr.b) next_pc = static_cast<std::size_t>(slot.imm);
                break;
            case Opcode::BNE:
                if (pr.a != pr.b) next_pc = static_cast<std::size_t>(slot.imm);
                break;
            case Opcode::LW:
            case Opcode::SW: {
                const std::int64_t addr = static_cast<std::int64_t>(pr.a) + slot.imm;
                try {
                    (void)m.memory.word_index(addr);
                } catch (const MisalignedAddress& e) {
                    throw fault(SimFault::MisalignedAddress, at, e.what());
                } catch (const AddressOutOfRange& e) {
                    throw fault(SimFault::AddressOutOfRange, at, e.what());
                }
                pr.mem = MemAccess{slot.op == Opcode::LW ? MemAccess::Kind::Load : MemAccess::Kind::Store,
                                   static_cast<std::uint32_t>(addr)};
                if (slot.op == Opcode::LW) {
                    pr.result = m.memory.read(addr);
                    writes.push_back({i, pr.result, register_index(slot.dest)});
                } else {
                    stores.push_back({i, addr, pr.b});
                }
                break;
            }
            default:
                pr.result = alu(slot.op, pr.a, pr.b);
                writes.push_back({i, pr.result, register_index(slot.dest)});
                break;
        }
    }

    // Commit: registers and outputs, then stores in row-major order.
    for (const auto& w : writes) {
        PEState& st = m.pes[static_cast<std::size_t>(w.pe)];
        if (w.out) st.out = *w.out;
        if (w.reg >= 0 && w.out) st.regs[static_cast<std::size_t>(w.reg)] = *w.out;
    }
    for (std::size_t i = 0; i < stores.size(); ++i) {
        for (std::size_t j = i + 1; j < stores.size() && warnings; ++j) {
            if (stores[i].addr == stores[j].addr) {
                const auto a = arch.coord_of(stores[i].pe);
                const auto b = arch.coord_of(stores[j].pe);
                warnings->push_back("step " + std::to_string(step_idx) + ": PE(" + std::to_string(a.row) + "," +
                                    std::to_string(a.col) + ") and PE(" + std::to_string(b.row) + "," +
                                    std::to_string(b.col) + ") store to byte address " +
                                    std::to_string(stores[i].addr) + "; the later PE in row-major order wins");
            }
        }
        m.memory.write(stores[i].addr, stores[i].value);
    }
    for (std::size_t i = 0; i < m.pes.size(); ++i) m.pes[i].last_opcode = ins.slots[i].op;

    ++m.steps_executed;
    if (exit_now) {
        m.exited = true;
        return rec;
    }
    const std::size_t target = next_pc.value_or(m.pc + 1);
    if (target >= n)
        throw SimError(SimFault::PcOverrun, step_idx, -1, -1,
                       "instruction " + std::to_string(m.pc) + " falls through past the last instruction (" +
                           std::to_string(n) + " total) without EXIT");
    m.pc = target;
    return rec;
}

RunOutput run(const Kernel& kernel, const Architecture& arch, MemoryImage mem0, std::size_t max_steps) {
    RunOutput out{Trace{}, Machine(arch, std::move(mem0))};
    Machine& m = out.final_state;
    out.trace.termination = Termination::MaxSteps;
    while (m.steps_executed < max_steps) {
        out.trace.steps.push_back(step(m, kernel, arch, &out.trace.warnings));
        if (m.exited) {
            out.trace.termination = Termination::Exited;
            break;
        }
    }
    return out;
}

std::string trace_to_jsonl(const Trace& trace, const Architecture& arch) {
    std::string out;
    for (const auto& s : trace.steps) {
        nlohmann::json pes = nlohmann::json::array();
        for (std::size_t i = 0; i < s.pes.size(); ++i) {
            const auto& p = s.pes[i];
            const auto c = arch.coord_of(static_cast<int>(i));
            nlohmann::json e = {
                {"row", c.row},
                {"col", c.col},
                {"op", std::string(mnemonic(p.op))},
                {"src_a", std::string(to_string(p.src_a))},
                {"src_b", std::string(to_string(p.src_b))},
                {"a", p.a},
                {"b", p.b},
                {"switched", p.switched},
            };
            e["result"] = p.result ? nlohmann::json(*p.result) : nlohmann::json(nullptr);
            if (p.mem)
                e["mem"] = {{"kind", p.mem->kind == MemAccess::Kind::Load ? "load" : "store"},
                            {"byte_addr", p.mem->byte_addr}};
            else
                e["mem"] = nullptr;
            pes.push_back(std::move(e));
        }
        nlohmann::json line = {{"step", s.step_index}, {"pc", s.pc}, {"pes", std::move(pes)}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

}  // namespace cgra
