#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cgra/errors.hpp"
#include "cgra/sim.hpp"
#include "oracles/conv_reference.hpp"
#include "oracles/isa_vectors.hpp"
#include "random_kernel.hpp"
#include "test_util.hpp"

using namespace cgra;

namespace {

Kernel blank(const Architecture& a, std::size_t n) {
    Kernel k;
    for (std::size_t i = 0; i < n; ++i) k.instructions.emplace_back(a.rows, a.cols);
    return k;
}

PESlot sl(Opcode op, OperandSrc a = OperandSrc::ZERO, OperandSrc b = OperandSrc::ZERO, Dest d = Dest::OUT_ONLY,
          int imm = 0) {
    return PESlot{op, a, b, d, static_cast<std::int16_t>(imm)};
}

}  // namespace

TEST_CASE("ISA golden vectors", "[sim]") {
    const auto& vs = oracle::isa_vectors();
    CHECK(vs.size() >= 30);
    for (const auto& v : vs) {
        INFO(v.name);
        CHECK(oracle::check_isa_vector(v).empty());
    }
}

TEST_CASE("golden vectors cover every opcode and operand source", "[sim]") {
    std::set<Opcode> ops;
    std::set<OperandSrc> srcs;
    for (const auto& v : oracle::isa_vectors()) {
        for (const auto& [at, s] : v.slots) {
            ops.insert(s.op);
            if (operands_read(s.op) >= 1) srcs.insert(s.src_a);
            if (operands_read(s.op) >= 2) srcs.insert(s.src_b);
        }
    }
    CHECK(ops.size() == kOpcodeCount);
    CHECK(srcs.size() == kOperandSrcCount);
}

TEST_CASE("all-NOP step leaves state unchanged and advances pc", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 2);
    k.instructions[1].at(0, 0).op = Opcode::EXIT;
    MemoryImage mem(a);
    mem.write(8, 42);
    Machine m(a, mem);
    m.pes[3].regs[2] = 9;
    m.pes[3].out = -1;
    const auto before = m.pes;
    step(m, k, a);
    CHECK(m.pc == 1);
    CHECK(m.memory == mem);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(m.pes[i].regs == before[i].regs);
        CHECK(m.pes[i].out == before[i].out);
    }
}

TEST_CASE("neighbor exchange is synchronous", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 3);
    k.instructions[0].at(0, 0) = sl(Opcode::SADD, OperandSrc::IMM, OperandSrc::ZERO, Dest::OUT_ONLY, 7);
    // In the same step PE(0,1) still sees the old value of PE(0,0).
    k.instructions[0].at(0, 1) = sl(Opcode::SADD, OperandSrc::RCL, OperandSrc::ZERO);
    k.instructions[1].at(0, 1) = sl(Opcode::SADD, OperandSrc::RCL, OperandSrc::ZERO);
    k.instructions[2].at(3, 3).op = Opcode::EXIT;
    Machine m(a, MemoryImage(a));
    step(m, k, a);
    CHECK(m.pe(a, {0, 1}).out == 0);
    step(m, k, a);
    CHECK(m.pe(a, {0, 1}).out == 7);
}

TEST_CASE("value passed right is read back through RCL", "[sim]") {
    for (bool torus : {true, false}) {
        Architecture a;
        a.torus = torus;
        for (int r = 0; r < a.rows; ++r) {
            for (int c = 0; c < a.cols; ++c) {
                const auto right = neighbor_of(a, {r, c}, Direction::Right);
                if (!right) continue;
                Kernel k = blank(a, 3);
                k.instructions[0].at(r, c) = sl(Opcode::SADD, OperandSrc::IMM, OperandSrc::ZERO, Dest::OUT_ONLY,
                                                100 + r * 10 + c);
                k.instructions[1].at(right->row, right->col) = sl(Opcode::SADD, OperandSrc::RCL, OperandSrc::ZERO);
                k.instructions[2].at(0, 0).op = Opcode::EXIT;
                const auto out = run(k, a, MemoryImage(a), 10);
                CHECK(out.final_state.pe(a, *right).out == 100 + r * 10 + c);
            }
        }
    }
}

TEST_CASE("without torus, edge reads of missing neighbors are zero", "[sim]") {
    Architecture a;
    a.torus = false;
    Kernel k = blank(a, 2);
    k.instructions[0].at(0, 3) = sl(Opcode::SADD, OperandSrc::IMM, OperandSrc::ZERO, Dest::OUT_ONLY, 5);
    k.instructions[1].at(0, 0) = sl(Opcode::SADD, OperandSrc::RCL, OperandSrc::RCT);
    k.instructions[1].at(3, 3).op = Opcode::EXIT;
    auto out = run(k, a, MemoryImage(a), 10);
    CHECK(out.final_state.pe(a, {0, 0}).out == 0);
    a.torus = true;
    out = run(k, a, MemoryImage(a), 10);
    CHECK(out.final_state.pe(a, {0, 0}).out == 5);
}

TEST_CASE("run: lone EXIT gives one exited step", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 1);
    k.instructions[0].at(2, 2).op = Opcode::EXIT;
    const auto out = run(k, a, MemoryImage(a), 100);
    CHECK(out.trace.steps.size() == 1);
    CHECK(out.trace.termination == Termination::Exited);
}

TEST_CASE("run: endless loop stops at max_steps", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 2);
    k.instructions[1].at(0, 0) = sl(Opcode::JUMP, OperandSrc::ZERO, OperandSrc::ZERO, Dest::OUT_ONLY, 0);
    const auto out = run(k, a, MemoryImage(a), 100);
    CHECK(out.trace.steps.size() == 100);
    CHECK(out.trace.termination == Termination::MaxSteps);
    for (std::size_t i = 0; i < out.trace.steps.size(); ++i) {
        CHECK(out.trace.steps[i].step_index == i);
        CHECK(out.trace.steps[i].pc == i % 2);
    }
}

TEST_CASE("run faults carry step and PE", "[sim]") {
    const Architecture a;
    {
        Kernel k = blank(a, 2);  // falls off the end
        try {
            run(k, a, MemoryImage(a), 10);
            FAIL("expected PcOverrun");
        } catch (const SimError& e) {
            CHECK(e.fault() == SimFault::PcOverrun);
            CHECK(e.step() == 1);
        }
    }
    {
        Kernel k = blank(a, 2);
        k.instructions[1].at(2, 1) = sl(Opcode::LW, OperandSrc::ZERO, OperandSrc::ZERO, Dest::OUT_ONLY, 2);
        try {
            run(k, a, MemoryImage(a), 10);
            FAIL("expected MisalignedAddress");
        } catch (const SimError& e) {
            CHECK(e.fault() == SimFault::MisalignedAddress);
            CHECK(e.step() == 1);
            CHECK(e.row() == 2);
            CHECK(e.col() == 1);
        }
    }
    {
        Kernel k = blank(a, 1);
        k.instructions[0].at(0, 0) = sl(Opcode::SW, OperandSrc::ZERO, OperandSrc::ZERO, Dest::OUT_ONLY, -4);
        CHECK_THROWS_MATCHES(run(k, a, MemoryImage(a), 10), SimError,
                             Catch::Matchers::Predicate<const SimError&>(
                                 [](const SimError& e) { return e.fault() == SimFault::AddressOutOfRange; }));
    }
}

TEST_CASE("switch flag marks opcode changes from the second step on", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 4);
    k.instructions[0].at(0, 0) = sl(Opcode::SADD);
    k.instructions[1].at(0, 0) = sl(Opcode::SADD);
    k.instructions[2].at(0, 0) = sl(Opcode::SMUL);
    k.instructions[3].at(3, 3).op = Opcode::EXIT;
    const auto t = run(k, a, MemoryImage(a), 10).trace;
    CHECK_FALSE(t.steps[0].pes[0].switched);
    CHECK_FALSE(t.steps[1].pes[0].switched);
    CHECK(t.steps[2].pes[0].switched);
    CHECK(t.steps[3].pes[0].switched);  // SMUL -> NOP
    CHECK_FALSE(t.steps[0].pes[15].switched);
    CHECK(t.steps[3].pes[15].switched);  // NOP -> EXIT
}

TEST_CASE("same-step loads observe pre-step memory (random pairs)", "[sim]") {
    const Architecture a;
    std::mt19937 rng(31337);
    for (int t = 0; t < 300; ++t) {
        MemoryImage mem(a);
        const int addr = 4 * std::uniform_int_distribution<int>(0, 1000)(rng);
        const int old_value = std::uniform_int_distribution<int>(-1000, 1000)(rng);
        const int new_value = std::uniform_int_distribution<int>(-1000, 1000)(rng);
        mem.write(addr, old_value);
        const int st = std::uniform_int_distribution<int>(0, 15)(rng);
        int ld = std::uniform_int_distribution<int>(0, 14)(rng);
        if (ld >= st) ++ld;
        Kernel k = blank(a, 2);
        Machine m(a, mem);
        m.pes[static_cast<std::size_t>(st)].regs[0] = new_value;
        k.instructions[0].slots[static_cast<std::size_t>(st)] =
            sl(Opcode::SW, OperandSrc::IMM, OperandSrc::R0, Dest::OUT_ONLY, addr / 2);
        k.instructions[0].slots[static_cast<std::size_t>(ld)] =
            sl(Opcode::LW, OperandSrc::IMM, OperandSrc::ZERO, Dest::OUT_ONLY, addr / 2);
        k.instructions[1].at(0, 0).op = Opcode::EXIT;
        step(m, k, a);
        CHECK(m.pes[static_cast<std::size_t>(ld)].out == old_value);
        CHECK(m.memory.read(addr) == new_value);
    }
}

TEST_CASE("same-step store collisions warn and the later PE wins", "[sim]") {
    const Architecture a;
    Kernel k = blank(a, 1);
    k.instructions[0].at(0, 1) = sl(Opcode::SW, OperandSrc::ZERO, OperandSrc::IMM, Dest::OUT_ONLY, 16);
    k.instructions[0].at(3, 0) = sl(Opcode::SW, OperandSrc::IMM, OperandSrc::IMM, Dest::OUT_ONLY, 8);
    k.instructions[0].at(3, 3).op = Opcode::EXIT;
    const auto out = run(k, a, MemoryImage(a), 10);
    CHECK(out.final_state.memory.read(16) == 8);
    REQUIRE(out.trace.warnings.size() == 1);
    CHECK(out.trace.warnings[0].find("PE(0,1) and PE(3,0)") != std::string::npos);
}

TEST_CASE("run is deterministic and trace length counts dynamic steps", "[sim]") {
    std::mt19937 rng(5);
    const Architecture a;
    for (int t = 0; t < 100; ++t) {
        const Kernel k = testutil::random_kernel(rng, a.rows, a.cols);
        auto attempt = [&]() -> std::optional<RunOutput> {
            try {
                return run(k, a, MemoryImage(a), 64);
            } catch (const SimError&) {
                return std::nullopt;
            }
        };
        const auto x = attempt();
        const auto y = attempt();
        REQUIRE(x.has_value() == y.has_value());
        if (!x) continue;
        CHECK(x->trace.steps.size() == y->trace.steps.size());
        CHECK(x->final_state.memory == y->final_state.memory);
        CHECK(x->final_state.steps_executed == x->trace.steps.size());
        CHECK(trace_to_jsonl(x->trace, a) == trace_to_jsonl(y->trace, a));
    }
}

TEST_CASE("memory image parsing", "[sim]") {
    const Architecture a;
    CHECK(parse_memory_image("0x0: 5\n", a).read(0) == 5);
    CHECK(parse_memory_image("", a) == MemoryImage(a));
    const auto m = parse_memory_image("// c\n0x10: 0xFFFFFFFF\n20: -3 # trailing\n\n0x8: 0x7fffffff\n", a);
    CHECK(m.read(0x10) == -1);
    CHECK(m.read(20) == -3);
    CHECK(m.read(8) == 2147483647);
    CHECK_THROWS_AS(parse_memory_image("0x2: 1\n", a), MisalignedAddress);
    CHECK_THROWS_AS(parse_memory_image("0x10000: 1\n", a), AddressOutOfRange);
    CHECK_THROWS_AS(parse_memory_image("0x0 1\n", a), ParseError);
    CHECK_THROWS_AS(parse_memory_image("0x0: zz\n", a), ParseError);
    CHECK_THROWS_AS(parse_memory_image("0x0: 0x100000000\n", a), ParseError);
    std::vector<std::string> w;
    CHECK(parse_memory_image("0x4: 1\n0x4: 2\n", a, &w).read(4) == 2);
    CHECK(w.size() == 1);
}

TEST_CASE("memory image render round-trips", "[sim]") {
    const Architecture a;
    std::mt19937 rng(11);
    MemoryImage m(a);
    for (int i = 0; i < 200; ++i)
        m.write(4 * std::uniform_int_distribution<int>(0, 16383)(rng), static_cast<std::int32_t>(rng()));
    CHECK(parse_memory_image(render_memory_image(m), a) == m);
}

TEST_CASE("shipped convolution kernels match the scalar reference", "[sim]") {
    const auto a = testutil::baseline_arch();
    const auto y = oracle::conv2d_valid(oracle::sample_image(), oracle::kInputSize, oracle::sample_weights(),
                                        oracle::kKernelSize);
    REQUIRE(y[0] == 10);  // hand check: row sums 2 + 23 - 15
    for (const char* name : {"conv_wp", "im2col_ip", "conv_op", "im2col_op"}) {
        INFO(name);
        const auto dir = testutil::source_dir() / "kernels";
        const Kernel k = load_kernel(dir / (std::string(name) + ".cgra"), a);
        const MemoryImage mem0 = load_memory_image(dir / (std::string(name) + ".mem"), a);
        const auto out = run(k, a, mem0, 100000);
        CHECK(out.trace.termination == Termination::Exited);
        CHECK(out.final_state.memory == oracle::with_output(mem0, y, oracle::kOutputBase));
    }
}
