// Generates the shipped convolution kernels and their input memory images.
//
// Workload: 3x3 single-channel convolution (valid padding) of an 8x8 input
// into a 6x6 output on a 4x4 grid. Four mappings are emitted:
//   conv_wp    weight-parallel, one weight per PE, sliding over the input
//   im2col_ip  weight-parallel over a pre-lowered 36x9 patch matrix
//   conv_op    output-parallel, one output pixel per PE, three passes
//   im2col_op  output-parallel over the patch matrix
//
// Usage: gen-conv-kernels OUT_DIR

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

#include "cgra/arch.hpp"
#include "cgra/kernel.hpp"
#include "cgra/sim.hpp"

namespace fs = std::filesystem;
using namespace cgra;

namespace {

constexpr int kIn = 8;
constexpr int kK = 3;
constexpr int kOut = kIn - kK + 1;  // 6
constexpr int kPixels = kOut * kOut;
constexpr int kTaps = kK * kK;

constexpr std::int64_t kWeightBase = 0x0;
constexpr std::int64_t kYBase = 0xC100;
constexpr std::int64_t kColBase = 0x1000;   // im2col patch matrix, 36 rows of 9 words
constexpr std::int64_t kOpXBase = 0x100;    // conv_op input

// conv_wp keeps one copy of x per weight row, each in its own bank (blocked
// mapping) and at a distinct word offset modulo 4 (interleaved mapping).
constexpr std::int64_t wp_copy_base(int r) { return r * 0x4000 + 0x100 + 4 * r; }

int input_at(int i, int j) { return ((7 * i + 3 * j) % 11) - 5; }
constexpr int kWeights[kTaps] = {1, -2, 3, 0, 4, -1, 2, 1, -3};

PESlot op(Opcode o, OperandSrc a = OperandSrc::ZERO, OperandSrc b = OperandSrc::ZERO, Dest d = Dest::OUT_ONLY,
          int imm = 0) {
    if (imm < INT16_MIN || imm > INT16_MAX) throw std::logic_error("immediate out of range");
    return PESlot{o, a, b, d, static_cast<std::int16_t>(imm)};
}

// Sets a register to an arbitrary even address below 0x10000 using IMM + IMM.
PESlot set_addr(Dest d, std::int64_t addr) {
    if (addr % 2 != 0 || addr / 2 > INT16_MAX) throw std::logic_error("address not reachable by IMM+IMM");
    return op(Opcode::SADD, OperandSrc::IMM, OperandSrc::IMM, d, static_cast<int>(addr / 2));
}

PESlot add_imm(OperandSrc reg, Dest d, int imm) { return op(Opcode::SADD, reg, OperandSrc::IMM, d, imm); }

struct Builder {
    const Architecture& arch;
    Kernel k;
    explicit Builder(const Architecture& a, std::string name) : arch(a) { k.name = std::move(name); }
    Instruction& add() {
        k.instructions.emplace_back(arch.rows, arch.cols);
        return k.instructions.back();
    }
};

constexpr OperandSrc kR0 = OperandSrc::R0, kR1 = OperandSrc::R1, kR2 = OperandSrc::R2, kR3 = OperandSrc::R3;
constexpr OperandSrc kZero = OperandSrc::ZERO, kImm = OperandSrc::IMM, kSelf = OperandSrc::SELF;
constexpr OperandSrc kRcl = OperandSrc::RCL, kRct = OperandSrc::RCT, kRcb = OperandSrc::RCB;

// Weight-parallel mapping shared by conv_wp and im2col_ip.
//
// PE(r,c), r,c < 3, holds w[r][c] in R0, the current input in R1 and its
// input pointer in R2. Row r reduces its three products left to right into
// PE(r,3); PE(1,3) adds the three row sums and PE(2,3) stores the result
// through its pointer R1. Column 3 runs one pixel behind the multipliers, so
// the first store of the loop writes a zero just below y.
//
// addr(r, c) gives the address of pixel 0's operand for PE(r,c);
// `stride` is the per-pixel pointer step and `row_skip`, when nonzero, the
// extra step at the end of each output row (outer loop).
Kernel weight_parallel(const Architecture& arch, const std::string& name,
                       const std::function<std::int64_t(int, int)>& addr, int stride, int row_skip) {
    Builder b(arch, name);
    const int inner = row_skip ? kOut : kPixels;

    // P0: load weights, loop counters, output pointer.
    auto& p0 = b.add();
    for (int r = 0; r < kK; ++r)
        for (int c = 0; c < kK; ++c)
            p0.at(r, c) = op(Opcode::LW, kZero, kZero, Dest::R0, static_cast<int>(kWeightBase + 4 * (kK * r + c)));
    p0.at(3, 0) = op(Opcode::SADD, kZero, kImm, Dest::R0, inner);
    if (row_skip) p0.at(3, 1) = op(Opcode::SADD, kZero, kImm, Dest::R0, kOut);
    p0.at(2, 3) = set_addr(Dest::R1, kYBase - 8);
    // P1: input pointers; clear PE(2,3).out, which column 3 reads as a row sum.
    auto& p1 = b.add();
    for (int r = 0; r < kK; ++r)
        for (int c = 0; c < kK; ++c) p1.at(r, c) = set_addr(Dest::R2, addr(r, c));
    p1.at(2, 3) = op(Opcode::SADD, kZero, kZero);
    // P2: first inputs.
    auto& p2 = b.add();
    for (int r = 0; r < kK; ++r)
        for (int c = 0; c < kK; ++c) p2.at(r, c) = op(Opcode::LW, kR2, kZero, Dest::R1);

    const int loop = static_cast<int>(b.k.size());
    // I1: products; column 3 adds the outer row sums of the previous pixel.
    auto& i1 = b.add();
    for (int r = 0; r < kK; ++r)
        for (int c = 0; c < kK; ++c)
            i1.at(r, c) = op(Opcode::SMUL, kR0, kR1, c == 2 ? Dest::R3 : Dest::OUT_ONLY);
    i1.at(1, 3) = op(Opcode::SADD, kRct, kRcb);
    i1.at(3, 0) = add_imm(kR0, Dest::R0, -1);
    // I2: first partial sum; advance pointers of columns 0 and 2; finish y.
    auto& i2 = b.add();
    for (int r = 0; r < kK; ++r) {
        i2.at(r, 0) = add_imm(kR2, Dest::R2, stride);
        i2.at(r, 1) = op(Opcode::SADD, kRcl, kSelf);
        i2.at(r, 2) = add_imm(kR2, Dest::R2, stride);
    }
    i2.at(1, 3) = op(Opcode::SADD, kSelf, kR0);
    i2.at(2, 3) = add_imm(kR1, Dest::R1, 4);
    // I3: row sums; column 0 loads; store the previous y.
    auto& i3 = b.add();
    for (int r = 0; r < kK; ++r) {
        i3.at(r, 0) = op(Opcode::LW, kR2, kZero, Dest::R1);
        i3.at(r, 1) = add_imm(kR2, Dest::R2, stride);
        i3.at(r, 2) = op(Opcode::SADD, kRcl, kR3);
    }
    i3.at(2, 3) = op(Opcode::SW, kR1, kRct);
    // I4: columns 1 and 2 load; row sums move into column 3; loop.
    auto& i4 = b.add();
    for (int r = 0; r < kK; ++r) {
        i4.at(r, 1) = op(Opcode::LW, kR2, kZero, Dest::R1);
        i4.at(r, 2) = op(Opcode::LW, kR2, kZero, Dest::R1);
        i4.at(r, 3) = op(Opcode::SADD, kRcl, kZero, r == 1 ? Dest::R0 : Dest::OUT_ONLY);
    }
    i4.at(3, 0) = op(Opcode::BNE, kR0, kZero, Dest::OUT_ONLY, loop);

    if (row_skip) {
        // I5/I6: skip to the next input row, reload, outer loop.
        auto& i5 = b.add();
        for (int r = 0; r < kK; ++r)
            for (int c = 0; c < kK; ++c) i5.at(r, c) = add_imm(kR2, Dest::R2, row_skip);
        i5.at(3, 0) = op(Opcode::SADD, kZero, kImm, Dest::R0, inner);
        i5.at(3, 1) = add_imm(kR0, Dest::R0, -1);
        auto& i6 = b.add();
        for (int r = 0; r < kK; ++r)
            for (int c = 0; c < kK; ++c) i6.at(r, c) = op(Opcode::LW, kR2, kZero, Dest::R1);
        i6.at(3, 1) = op(Opcode::BNE, kR0, kZero, Dest::OUT_ONLY, loop);
    }

    // Drain: column 3 finishes and stores the last pixel.
    b.add().at(1, 3) = op(Opcode::SADD, kRct, kRcb);
    auto& d2 = b.add();
    d2.at(1, 3) = op(Opcode::SADD, kSelf, kR0);
    d2.at(2, 3) = add_imm(kR1, Dest::R1, 4);
    auto& d3 = b.add();
    d3.at(2, 3) = op(Opcode::SW, kR1, kRct);
    d3.at(3, 3) = op(Opcode::EXIT);
    return b.k;
}

// Output-parallel mapping shared by conv_op and im2col_op: the 12 PEs of rows
// 0..2 each own one output pixel per pass; three passes cover all 36 pixels.
// Every tap is LW (absolute address), SMUL by the weight immediate, SADD.
Kernel output_parallel(const Architecture& arch, const std::string& name,
                       const std::function<std::int64_t(int, int)>& tap_addr) {
    Builder b(arch, name);
    constexpr int kLanes = 12;
    auto& p0 = b.add();
    for (int k = 0; k < kLanes; ++k) p0.at(k / 4, k % 4) = set_addr(Dest::R3, kYBase);

    for (int pass = 0; pass < kPixels / kLanes; ++pass) {
        for (int t = 0; t < kTaps; ++t) {
            auto& ld = b.add();
            auto& mul = b.add();
            for (int k = 0; k < kLanes; ++k) {
                const int p = pass * kLanes + k;
                ld.at(k / 4, k % 4) = op(Opcode::LW, kZero, kZero, Dest::R1, static_cast<int>(tap_addr(p, t)));
                mul.at(k / 4, k % 4) = op(Opcode::SMUL, kR1, kImm, t == 0 ? Dest::R0 : Dest::R2, kWeights[t]);
            }
            if (t == 0) continue;
            auto& acc = b.add();
            for (int k = 0; k < kLanes; ++k) acc.at(k / 4, k % 4) = op(Opcode::SADD, kR0, kR2, Dest::R0);
        }
        auto& st = b.add();
        for (int k = 0; k < kLanes; ++k)
            st.at(k / 4, k % 4) = op(Opcode::SW, kR3, kR0, Dest::OUT_ONLY, 4 * (pass * kLanes + k));
        if (pass == kPixels / kLanes - 1) st.at(3, 3) = op(Opcode::EXIT);
    }
    return b.k;
}

MemoryImage base_memory(const Architecture& arch) {
    MemoryImage m(arch);
    for (int t = 0; t < kTaps; ++t) m.write(kWeightBase + 4 * t, kWeights[t]);
    return m;
}

void write_im2col(MemoryImage& m) {
    for (int p = 0; p < kPixels; ++p)
        for (int t = 0; t < kTaps; ++t)
            m.write(kColBase + 4 * (kTaps * p + t), input_at(p / kOut + t / kK, p % kOut + t % kK));
}

void emit(const fs::path& dir, const Kernel& k, const MemoryImage& mem, const std::string& about) {
    std::ofstream kf(dir / (k.name + ".cgra"), std::ios::binary | std::ios::trunc);
    kf << about << render_kernel(k);
    std::ofstream mf(dir / (k.name + ".mem"), std::ios::binary | std::ios::trunc);
    mf << "// initial memory for " << k.name << " (generated)\n" << render_memory_image(mem);
    if (!kf || !mf) throw std::runtime_error("cannot write into " + dir.string());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen-conv-kernels OUT_DIR\n";
        return 1;
    }
    const fs::path dir = argv[1];
    fs::create_directories(dir);

    Architecture arch;  // 4x4, 4 banks x 4096 words
    const std::string common =
        "// 3x3 convolution, 8x8 input, 6x6 output; weights at 0x0, y at 0xc100 (row-major).\n"
        "// Generated by gen-conv-kernels; do not edit by hand.\n";
    try {
        {
            MemoryImage m = base_memory(arch);
            for (int r = 0; r < kK; ++r)
                for (int i = 0; i < kIn; ++i)
                    for (int j = 0; j < kIn; ++j) m.write(wp_copy_base(r) + 4 * (kIn * i + j), input_at(i, j));
            const Kernel k = weight_parallel(
                arch, "conv_wp", [](int r, int c) { return wp_copy_base(r) + 4 * (kIn * r + c); }, 4, 8);
            emit(dir, k, m,
                 "// Weight-parallel mapping: PE(r,c) holds w[r][c] and slides over the input.\n"
                 "// x is replicated per weight row at 0x100, 0x4104 and 0x8108.\n" +
                     common);
        }
        {
            MemoryImage m = base_memory(arch);
            write_im2col(m);
            const Kernel k = weight_parallel(
                arch, "im2col_ip", [](int r, int c) { return kColBase + 4 * (kK * r + c); }, 4 * kTaps, 0);
            emit(dir, k, m,
                 "// Weight-parallel mapping over the im2col patch matrix (36x9 words at 0x1000).\n" + common);
        }
        {
            MemoryImage m = base_memory(arch);
            for (int i = 0; i < kIn; ++i)
                for (int j = 0; j < kIn; ++j) m.write(kOpXBase + 4 * (kIn * i + j), input_at(i, j));
            const Kernel k = output_parallel(arch, "conv_op", [](int p, int t) {
                return kOpXBase + 4 * (kIn * (p / kOut + t / kK) + p % kOut + t % kK);
            });
            emit(dir, k, m, "// Output-parallel mapping: 12 PEs own one output pixel each, 3 passes.\n" + common);
        }
        {
            MemoryImage m = base_memory(arch);
            write_im2col(m);
            const Kernel k = output_parallel(arch, "im2col_op",
                                             [](int p, int t) { return kColBase + 4 * (kTaps * p + t); });
            emit(dir, k, m,
                 "// Output-parallel mapping over the im2col patch matrix (36x9 words at 0x1000).\n" + common);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
