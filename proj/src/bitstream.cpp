#include "cgra/bitstream.hpp"

#include "cgra/errors.hpp"

namespace cgra {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'G', 'R', 'K'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
           static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

}  // namespace

std::uint32_t encode_slot(const PESlot& s) {
    const auto op = static_cast<std::uint32_t>(s.op);
    const auto a = static_cast<std::uint32_t>(s.src_a);
    const auto b = static_cast<std::uint32_t>(s.src_b);
    const auto d = static_cast<std::uint32_t>(s.dest);
    if (op > 0x1F) throw ValidationError("opcode", "does not fit in 5 bits");
    if (a > 0xF || b > 0xF) throw ValidationError("src", "does not fit in 4 bits");
    if (d > 0x7) throw ValidationError("dest", "does not fit in 3 bits");
    return op << 27 | a << 23 | b << 19 | d << 16 | static_cast<std::uint16_t>(s.imm);
}

PESlot decode_slot(std::uint32_t w) {
    const std::uint32_t op = w >> 27;
    const std::uint32_t a = (w >> 23) & 0xF;
    const std::uint32_t b = (w >> 19) & 0xF;
    const std::uint32_t d = (w >> 16) & 0x7;
    if (op >= kOpcodeCount) throw ValidationError("opcode", "reserved opcode value " + std::to_string(op));
    if (a >= kOperandSrcCount) throw ValidationError("src_a", "reserved source value " + std::to_string(a));
    if (b >= kOperandSrcCount) throw ValidationError("src_b", "reserved source value " + std::to_string(b));
    if (d >= kDestCount) throw ValidationError("dest", "reserved destination value " + std::to_string(d));
    PESlot s;
    s.op = static_cast<Opcode>(op);
    s.src_a = static_cast<OperandSrc>(a);
    s.src_b = static_cast<OperandSrc>(b);
    s.dest = static_cast<Dest>(d);
    s.imm = static_cast<std::int16_t>(static_cast<std::uint16_t>(w & 0xFFFF));
    return s;
}

std::vector<std::uint8_t> encode_bitstream(const Kernel& kernel, const Architecture& arch) {
    validate_kernel(kernel, arch);
    if (arch.rows > 0xFF) throw ValidationError("rows", "does not fit in the 8-bit header field");
    if (arch.cols > 0xFF) throw ValidationError("cols", "does not fit in the 8-bit header field");
    if (kernel.size() > 0xFFFF)
        throw ValidationError("instructions", "count does not fit in the 16-bit header field");

    std::vector<std::uint8_t> out;
    out.reserve(kBitstreamHeaderBytes + 4 * kernel.size() * static_cast<std::size_t>(arch.pe_count()));
    for (auto ch : kMagic) out.push_back(static_cast<std::uint8_t>(ch));
    out.push_back(static_cast<std::uint8_t>(arch.rows));
    out.push_back(static_cast<std::uint8_t>(arch.cols));
    out.push_back(static_cast<std::uint8_t>(kernel.size() & 0xFF));
    out.push_back(static_cast<std::uint8_t>(kernel.size() >> 8));
    for (const auto& ins : kernel.instructions)
        for (const auto& slot : ins.slots) put_u32(out, encode_slot(slot));
    return out;
}

Kernel decode_bitstream(std::span<const std::uint8_t> bytes, const Architecture& arch) {
    if (bytes.size() < kBitstreamHeaderBytes)
        throw FormatError("bitstream shorter than its " + std::to_string(kBitstreamHeaderBytes) + "-byte header");
    for (int i = 0; i < 4; ++i)
        if (bytes[static_cast<std::size_t>(i)] != kMagic[i]) throw FormatError("bad magic, expected 'CGRK'");
    const int rows = bytes[4];
    const int cols = bytes[5];
    const std::size_t count = static_cast<std::size_t>(bytes[6]) | static_cast<std::size_t>(bytes[7]) << 8;
    if (rows != arch.rows || cols != arch.cols)
        throw FormatError("bitstream grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " does not match architecture " + std::to_string(arch.rows) + "x" +
                          std::to_string(arch.cols));
    const std::size_t slots = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::size_t expected = kBitstreamHeaderBytes + 4 * slots * count;
    if (bytes.size() != expected)
        throw FormatError("bitstream is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected));

    Kernel k;
    k.name = "decoded";
    k.instructions.reserve(count);
    std::size_t off = kBitstreamHeaderBytes;
    for (std::size_t i = 0; i < count; ++i) {
        Instruction ins(rows, cols);
        for (auto& slot : ins.slots) {
            slot = decode_slot(get_u32(bytes, off));
            off += 4;
        }
        k.instructions.push_back(std::move(ins));
    }
    validate_kernel(k, arch);
    return k;
}

}  // namespace cgra
