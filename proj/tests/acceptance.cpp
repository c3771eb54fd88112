// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "cgra/bitstream.hpp"
#include "cgra/errors.hpp"
#include "cgra/report.hpp"
#include "oracles/conv_reference.hpp"
#include "oracles/des_scheduler.hpp"
#include "oracles/isa_vectors.hpp"
#include "random_kernel.hpp"
#include "test_util.hpp"

using namespace cgra;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kConvRuntimeLimitS = 1.0;
constexpr std::size_t kMinIsaVectors = 30;
constexpr int kSchedulerTrials = 1000;
constexpr int kMaxRequests = 32;
constexpr std::uint32_t kMaxBanks = 8;
constexpr double kEnergyRelTol = 1e-9;
constexpr std::uint64_t kMulLatencyCc = 3;
constexpr double kMulEnergyBandPct = 5.0;
constexpr double kSweepRuntimeLimitS = 10.0;
constexpr double kStepEnergyRatioLimit = 2.0;
constexpr int kCodecTrials = 1000;

const std::array<const char*, 4> kKernels = {"conv_wp", "im2col_ip", "conv_op", "im2col_op"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass{true};
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << what;
        pass = pass && ok;
    }
};

struct Loaded {
    Kernel kernel;
    MemoryImage mem0;
};

Loaded load_shipped(const char* name, const Architecture& arch) {
    const auto dir = testutil::source_dir() / "kernels";
    return {load_kernel(dir / (std::string(name) + ".cgra"), arch),
            load_memory_image(dir / (std::string(name) + ".mem"), arch)};
}

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

Kernel blank(const Architecture& a, std::size_t n) {
    Kernel k;
    for (std::size_t i = 0; i < n; ++i) k.instructions.emplace_back(a.rows, a.cols);
    return k;
}

// ---------------------------------------------------------------------------

void functional_oracle(Outcome& o) {
    const auto arch = testutil::baseline_arch();
    const auto in = load_shipped("conv_wp", arch);
    const auto t0 = Clock::now();
    const auto out = run(in.kernel, arch, in.mem0, 1'000'000);
    const double secs = seconds_since(t0);
    const auto y = oracle::conv2d_valid(oracle::sample_image(), oracle::kInputSize, oracle::sample_weights(),
                                        oracle::kKernelSize);
    o.require(out.trace.termination == Termination::Exited, "kernel did not exit");
    o.require(out.final_state.memory == oracle::with_output(in.mem0, y, oracle::kOutputBase),
              "final memory differs from the scalar reference");
    o.require(secs < kConvRuntimeLimitS, "runtime " + std::to_string(secs) + " s");
    o.detail << (o.pass ? "" : "; ") << "steps=" << out.trace.steps.size() << " runtime=" << fmt6(secs) << "s";
}

void isa_golden(Outcome& o) {
    const auto& vs = oracle::isa_vectors();
    std::set<Opcode> ops;
    std::set<OperandSrc> srcs;
    std::size_t failed = 0;
    for (const auto& v : vs) {
        if (!oracle::check_isa_vector(v).empty()) {
            ++failed;
            o.require(false, "vector '" + v.name + "' mismatched; ");
        }
        for (const auto& [at, s] : v.slots) {
            ops.insert(s.op);
            if (operands_read(s.op) >= 1) srcs.insert(s.src_a);
            if (operands_read(s.op) >= 2) srcs.insert(s.src_b);
        }
    }
    o.require(vs.size() >= kMinIsaVectors, "too few vectors; ");
    o.require(ops.size() == kOpcodeCount, "opcode coverage incomplete; ");
    o.require(srcs.size() == kOperandSrcCount, "operand source coverage incomplete; ");
    o.detail << vs.size() << " vectors, " << failed << " failed, " << ops.size() << "/" << kOpcodeCount << " opcodes, "
             << srcs.size() << "/" << kOperandSrcCount << " sources";
}

void scheduler_oracle(Outcome& o) {
    std::mt19937 rng(0xC0FFEE);
    std::set<std::pair<BusKind, DmaKind>> combos;
    int mismatches = 0;
    for (int t = 0; t < kSchedulerTrials; ++t) {
        Architecture a;
        a.rows = 4;
        a.cols = 8;  // 32 PEs, so up to 32 requests per step
        a.mem.bus = static_cast<BusKind>(t % 3);
        a.mem.dma = static_cast<DmaKind>((t / 3) % 2);
        combos.insert({a.mem.bus, a.mem.dma});
        a.mem.n_banks = std::uniform_int_distribution<std::uint32_t>(1, kMaxBanks)(rng);
        a.mem.bank_words = std::uniform_int_distribution<std::uint32_t>(1, 32)(rng);
        const int n = std::uniform_int_distribution<int>(0, kMaxRequests)(rng);
        std::vector<int> pes(32);
        for (int i = 0; i < 32; ++i) pes[static_cast<std::size_t>(i)] = i;
        std::shuffle(pes.begin(), pes.end(), rng);
        pes.resize(static_cast<std::size_t>(n));
        std::sort(pes.begin(), pes.end());  // row-major issue order
        std::uniform_int_distribution<std::uint64_t> word(0, a.mem.capacity_words() - 1);
        std::vector<AccessRequest> reqs;
        std::vector<oracle::DesRequest> des;
        for (int p : pes) {
            const auto w = word(rng);
            reqs.push_back(make_request(a, a.coord_of(p), MemAccess::Kind::Load, w));
            des.push_back(oracle::des_resources(a, a.coord_of(p), w));
        }
        const auto L = std::uniform_int_distribution<std::uint32_t>(1, 8)(rng);
        if (schedule_memory_accesses(reqs, a.mem, L) != oracle::des_schedule(des, L)) ++mismatches;
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatching instances; ");
    o.require(combos.size() == 6, "not every bus/DMA combination exercised; ");
    o.detail << kSchedulerTrials << " instances over " << combos.size() << " bus/DMA combinations, " << mismatches
             << " mismatches";
}

void latency_laws(Outcome& o) {
    const auto base = testutil::baseline_arch();
    const auto model = testutil::sample_char();
    for (const char* name : kKernels) {
        const auto in = load_shipped(name, base);
        const auto trace = run(in.kernel, base, in.mem0, 1'000'000).trace;
        const auto lat = [&](const Architecture& a, FidelityCase fc) {
            return kernel_latency(trace, a, resolve(model, fc)).cycles;
        };
        o.require(lat(base, FidelityCase::III) >= lat(base, FidelityCase::II),
                  std::string(name) + ": case III below case II; ");
        for (auto fc : {FidelityCase::III, FidelityCase::VI}) {
            for (auto dma : {DmaKind::PerColumn, DmaKind::PerPE}) {
                Architecture one = base, ntom = base;
                one.mem.dma = ntom.mem.dma = dma;
                ntom.mem.bus = BusKind::NToM;
                o.require(lat(ntom, fc) <= lat(one, fc), std::string(name) + ": NToM slower than OneToM; ");
            }
            for (auto bus : {BusKind::OneToM, BusKind::NToM, BusKind::Interleaved}) {
                Architecture col = base, pe = base;
                col.mem.bus = pe.mem.bus = bus;
                pe.mem.dma = DmaKind::PerPE;
                o.require(lat(pe, fc) <= lat(col, fc), std::string(name) + ": PerPE slower than PerColumn; ");
            }
        }
    }
    StepRecord s;
    s.pes.resize(static_cast<std::size_t>(base.pe_count()));
    s.pes[5].op = Opcode::SMUL;
    const auto cc = step_timing(s, base, resolve(model, FidelityCase::II)).total_cc;
    o.require(cc == kMulLatencyCc, "SMUL step is " + std::to_string(cc) + " cc; ");
    o.detail << kKernels.size() << " kernels; lone SMUL step = " << cc << " cc";
}

void energy_accounting(Outcome& o) {
    const auto arch = testutil::baseline_arch();
    const auto model = testutil::sample_char();
    int runs = 0;
    double worst = 0.0;
    for (const char* name : kKernels) {
        const auto in = load_shipped(name, arch);
        for (auto fc : kAllCases) {
            EstimateOptions opts;
            opts.fidelity = fc;
            const auto est = estimate(in.kernel, arch, model, in.mem0, opts);
            double steps = 0.0;
            for (const auto& s : est.result.per_step) steps += s.energy_pj;
            const double cells = est.result.energy_heatmap.sum();
            const double total = est.result.energy_pj;
            worst = std::max({worst, std::fabs(cells - total) / total, std::fabs(steps - total) / total});
            o.require(close_rel(cells, total, kEnergyRelTol) && close_rel(steps, total, kEnergyRelTol),
                      std::string(name) + " case " + std::string(to_string(fc)) + " unbalanced; ");
            ++runs;
        }
    }
    o.detail << runs << " runs, worst relative gap " << worst;
}

void topology_sweep(Outcome& o) {
    SweepInputs in;
    in.kernel = testutil::source_dir() / "kernels/conv_wp.cgra";
    in.memory = testutil::source_dir() / "kernels/conv_wp.mem";
    in.characterization = testutil::source_dir() / "char/openedge-sample.json";
    in.spec = load_sweep_spec(testutil::source_dir() / "sweeps/hw_topology.json");
    in.jobs = 1;
    const auto t0 = Clock::now();
    const auto res = run_sweep(in);
    const double secs = seconds_since(t0);
    const auto& rows = res.comparison.rows;
    auto row = [&](const std::string& id) -> const ComparisonRow& {
        for (const auto& r : rows)
            if (r.id == id) return r;
        throw std::runtime_error("missing variant " + id);
    };
    const auto& b0 = row("baseline");
    const auto& a = row("a_mul_1cc");
    const auto& d = row("d_n_to_m_per_pe");
    for (const auto& r : rows) o.require(d.latency_cc <= r.latency_cc, "d is not the fastest; ");
    o.require(a.latency_cc < b0.latency_cc, "a does not reduce latency; ");
    o.require(std::fabs(a.energy_reduction_pct) <= kMulEnergyBandPct, "a changes energy by more than the band; ");
    for (const char* id : {"b_n_to_m", "c_interleaved", "d_n_to_m_per_pe"}) {
        const auto& r = row(id);
        o.require(r.energy_pj < b0.energy_pj, std::string(id) + " does not reduce energy; ");
        o.require(r.avg_power_mw > b0.avg_power_mw, std::string(id) + " does not raise average power; ");
    }
    o.require(secs < kSweepRuntimeLimitS, "runtime " + std::to_string(secs) + " s; ");
    o.detail << (o.pass ? "" : "| ");
    for (const auto& r : rows)
        o.detail << r.id << " lat " << fmt6(-r.latency_reduction_pct) << "% E " << fmt6(-r.energy_reduction_pct)
                 << "% P " << fmt6(-r.power_reduction_pct) << "%; ";
    o.detail << "runtime " << fmt6(secs) << " s";
}

void clustering_and_step_energy(Outcome& o) {
    const Architecture arch = testutil::baseline_arch();
    const auto model = testutil::sample_char();

    // Two SMULs in one long step versus one per short step; every other slot is a NOP.
    const PESlot mul{Opcode::SMUL, OperandSrc::IMM, OperandSrc::IMM, Dest::R0, 3};
    Kernel clustered = blank(arch, 2);
    clustered.instructions[0].at(0, 0) = mul;
    clustered.instructions[0].at(2, 1) = mul;
    clustered.instructions[1].at(3, 3).op = Opcode::EXIT;
    Kernel split = blank(arch, 3);
    split.instructions[0].at(0, 0) = mul;
    split.instructions[1].at(2, 1) = mul;
    split.instructions[2].at(3, 3).op = Opcode::EXIT;
    for (auto fc : {FidelityCase::V, FidelityCase::VI}) {
        EstimateOptions opts;
        opts.fidelity = fc;
        const double ec = estimate(clustered, arch, model, MemoryImage(arch), opts).result.energy_pj;
        const double es = estimate(split, arch, model, MemoryImage(arch), opts).result.energy_pj;
        o.require(ec < es, "clustered not cheaper at case " + std::string(to_string(fc)) + "; ");
        o.detail << "case " << to_string(fc) << " long " << fmt6(ec) << " pJ vs short " << fmt6(es) << " pJ; ";
    }

    // SMUL-heavy versus LW-heavy steps of the weight-parallel kernel, energy per execution.
    const auto in = load_shipped("conv_wp", arch);
    EstimateOptions opts;
    opts.fidelity = FidelityCase::VI;
    const auto est = estimate(in.kernel, arch, model, in.mem0, opts);
    auto executions = [&](std::size_t pc) -> std::size_t {
        for (const auto& r : est.result.per_instruction)
            if (r.pc == pc) return r.executions;
        return 0;
    };
    // Loop-body steps only: the prologue runs once and is not representative.
    auto heaviest = [&](Opcode op) {
        std::size_t best = 0;
        long best_n = -1;
        for (std::size_t pc = 0; pc < in.kernel.size(); ++pc) {
            if (executions(pc) < 2) continue;
            const auto& sl = in.kernel.instructions[pc].slots;
            const long n = std::count_if(sl.begin(), sl.end(), [&](const PESlot& s) { return s.op == op; });
            if (n > best_n) best_n = n, best = pc;
        }
        return best;
    };
    auto per_exec = [&](std::size_t pc) {
        for (const auto& r : est.result.per_instruction)
            if (r.pc == pc) return r.energy_pj / static_cast<double>(r.executions);
        return 0.0;
    };
    const std::size_t mul_pc = heaviest(Opcode::SMUL);
    const std::size_t lw_pc = heaviest(Opcode::LW);
    const double em = per_exec(mul_pc);
    const double el = per_exec(lw_pc);
    const double ratio = std::max(em, el) / std::min(em, el);
    o.require(em > 0.0 && el > 0.0 && ratio <= kStepEnergyRatioLimit, "step energy ratio " + fmt6(ratio) + "; ");
    o.detail << "SMUL step pc" << mul_pc << " " << fmt6(em) << " pJ vs LW step pc" << lw_pc << " " << fmt6(el)
             << " pJ (ratio " << fmt6(ratio) << ")";
}

void degeneracy(Outcome& o) {
    const auto arch = testutil::baseline_arch();
    o.require(!arch.mul_latency_cc.has_value(), "baseline arch overrides the multiplier latency; ");
    auto model = testutil::sample_char();
    auto flat_power = model;
    flat_power.op_power_mw.fill(model.uniform_power_mw);
    auto flat_all = flat_power;
    flat_all.op_latency_cc.fill(model.uniform_latency_cc);

    int compared = 0;
    for (const char* name : kKernels) {
        const auto in = load_shipped(name, arch);
        const auto trace = run(in.kernel, arch, in.mem0, 1'000'000).trace;
        const auto lat1 = trace_timing(trace, arch, resolve(model, FidelityCase::I));
        const auto lat2 = trace_timing(trace, arch, resolve(flat_all, FidelityCase::II));
        for (std::size_t s = 0; s < lat1.size(); ++s)
            o.require(lat1[s].total_cc == lat2[s].total_cc, std::string(name) + ": case II latency differs; ");

        // Same timings, so the flat per-opcode powers must reproduce case I energy bit for bit.
        const auto e3 = resolve(flat_power, FidelityCase::III);
        const auto e4 = resolve(flat_power, FidelityCase::IV);
        const auto t3 = trace_timing(trace, arch, e3);
        o.require(kernel_energy(trace, t3, arch, e3).total_pj == kernel_energy(trace, t3, arch, e4).total_pj,
                  std::string(name) + ": case IV energy differs from case III; ");
        ++compared;
    }

    // Without memory traffic there is no contention, so case IV with flat
    // powers and latencies collapses all the way to case I.
    std::mt19937 rng(8);
    for (int t = 0; compared < 200 && t < 2000; ++t) {
        Kernel k = testutil::random_kernel(rng, arch.rows, arch.cols);
        for (auto& ins : k.instructions)
            for (auto& s : ins.slots)
                if (s.op == Opcode::LW || s.op == Opcode::SW) s.op = Opcode::SADD;
        Trace trace;
        try {
            trace = run(k, arch, MemoryImage(arch), 64).trace;
        } catch (const SimError&) {
            continue;
        }
        const auto e1 = resolve(model, FidelityCase::I);
        const auto e4 = resolve(flat_all, FidelityCase::IV);
        const auto k1 = kernel_energy(trace, trace_timing(trace, arch, e1), arch, e1);
        const auto k4 = kernel_energy(trace, trace_timing(trace, arch, e4), arch, e4);
        o.require(k1.total_pj == k4.total_pj && k1.energy.cells == k4.energy.cells,
                  "random kernel: case IV energy differs from case I; ");
        ++compared;
    }
    o.detail << compared << " comparisons";
}

void codec(Outcome& o) {
    const Architecture arch;
    std::mt19937 rng(77);
    int bad = 0;
    for (int t = 0; t < kCodecTrials; ++t) {
        const Kernel k = testutil::random_kernel(rng, arch.rows, arch.cols);
        const auto bytes = encode_bitstream(k, arch);
        const Kernel back = decode_bitstream(bytes, arch);
        if (!(back == k) || encode_bitstream(back, arch) != bytes) ++bad;
    }
    Kernel nop = blank(arch, 1);
    const auto bytes = encode_bitstream(nop, arch);
    const std::vector<std::uint8_t> header = {'C', 'G', 'R', 'K', 4, 4, 1, 0};
    const bool nop_ok = bytes.size() == header.size() + 16 * 4 &&
                        std::equal(header.begin(), header.end(), bytes.begin()) &&
                        std::all_of(bytes.begin() + 8, bytes.end(), [](std::uint8_t b) { return b == 0; });
    o.require(bad == 0, std::to_string(bad) + " roundtrip failures; ");
    o.require(nop_ok, "all-NOP encoding is not header + zero words; ");
    o.detail << kCodecTrials << " roundtrips, " << bad << " failures; all-NOP " << bytes.size() << " bytes";
}

int shell(const std::string& cmd) {
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void reproducibility(Outcome& o) {
    const auto a = testutil::temp_dir("accept_a");
    const auto b = testutil::temp_dir("accept_b");
    const auto src = testutil::source_dir();
    auto cmd = [&](const fs::path& out) {
        return std::string("'") + CGRA_ESTIM_EXE + "' estimate --arch '" + (src / "arch/baseline.json").string() +
               "' --char '" + (src / "char/openedge-sample.json").string() + "' --kernel '" +
               (src / "kernels/conv_wp.cgra").string() + "' --mem '" + (src / "kernels/conv_wp.mem").string() +
               "' --format all --out '" + out.string() + "' >/dev/null 2>&1";
    };
    o.require(shell(cmd(a)) == 0 && shell(cmd(b)) == 0, "estimate failed; ");
    std::size_t files = 0;
    std::size_t differing = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        if (testutil::read_file(e.path()) != testutil::read_file(b / e.path().filename())) ++differing;
    }
    for (const auto& e : fs::directory_iterator(b))
        if (!fs::exists(a / e.path().filename())) ++differing;
    o.require(files > 0 && differing == 0, std::to_string(differing) + " files differ; ");
    o.detail << files << " files compared, " << differing << " differ";
    fs::remove_all(a);
    fs::remove_all(b);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"functional oracle (conv_wp vs scalar convolution)", functional_oracle},
        {"ISA golden suite", isa_golden},
        {"scheduler vs discrete-event oracle", scheduler_oracle},
        {"latency laws", latency_laws},
        {"energy accounting", energy_accounting},
        {"hardware topology sweep", topology_sweep},
        {"instruction clustering and step energy", clustering_and_step_energy},
        {"fidelity degeneracy", degeneracy},
        {"bitstream codec", codec},
        {"report reproducibility", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " | "
                  << o.detail.str() << '\n';
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " passed\n";
    return failures == 0 ? 0 : 1;
}
