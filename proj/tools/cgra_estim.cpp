// cgra-estim: command-line driver for simulation, estimation, sweeps and comparisons.
//
// Exit codes: 0 ok, 1 usage, 2 input error, 3 simulation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>

#include <CLI11.hpp>

#include "cgra/bitstream.hpp"
#include "cgra/errors.hpp"
#include "cgra/report.hpp"

namespace fs = std::filesystem;
using namespace cgra;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitSim = 3;

OutputFormats formats_from(const std::string& f) {
    if (f == "json") return {false, false};
    if (f == "csv") return {true, false};
    if (f == "svg") return {false, true};
    return {true, true};
}

void write_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

void print_warnings(const std::vector<std::string>& ws) {
    for (const auto& w : ws) std::cerr << "warning: " << w << '\n';
}

std::string summary_line(const RunResult& r) {
    return r.id + ": case=" + std::string(to_string(r.fidelity)) + " steps=" + std::to_string(r.steps) +
           " termination=" + (r.termination == Termination::Exited ? "exited" : "max_steps") +
           " latency_cc=" + std::to_string(r.latency_cc) + " latency_ns=" + fmt6(r.latency_ns) +
           " energy_pj=" + fmt6(r.energy_pj) + " avg_power_mw=" + fmt6(r.avg_power_mw);
}

struct CommonRun {
    std::string kernel, arch, characterization, memory, out{"out"}, format{"all"}, fidelity{"vi"}, id;
    std::size_t max_steps{1'000'000};
};

void add_case_flags(CLI::App* sub, CommonRun& o) {
    sub->add_option("--case", o.fidelity, "fidelity case i..vi")
        ->check(CLI::IsMember({"i", "ii", "iii", "iv", "v", "vi", "1", "2", "3", "4", "5", "6"}, CLI::ignore_case));
    sub->add_option("--max-steps", o.max_steps, "dynamic step bound")->check(CLI::PositiveNumber);
}

void add_output_flags(CLI::App* sub, CommonRun& o) {
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "json|csv|svg|all")->check(CLI::IsMember({"json", "csv", "svg", "all"}));
}

MemoryImage memory_for(const CommonRun& o, const Architecture& arch, std::vector<std::string>& warnings) {
    return o.memory.empty() ? MemoryImage(arch) : load_memory_image(o.memory, arch, &warnings);
}

int cmd_simulate(const CommonRun& o, const std::string& trace_path) {
    const Architecture arch = load_architecture(o.arch);
    std::vector<std::string> warnings;
    const Kernel kernel = load_kernel(o.kernel, arch, &warnings);
    const MemoryImage mem0 = memory_for(o, arch, warnings);
    const RunOutput r = run(kernel, arch, mem0, o.max_steps);
    warnings.insert(warnings.end(), r.trace.warnings.begin(), r.trace.warnings.end());
    print_warnings(warnings);
    if (!trace_path.empty()) write_file(trace_path, trace_to_jsonl(r.trace, arch));
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "final_memory.txt", render_memory_image(r.final_state.memory));
    std::cout << kernel.name << ": steps=" << r.trace.steps.size()
              << " termination=" << (r.trace.termination == Termination::Exited ? "exited" : "max_steps")
              << " final_memory=" << digest(r.final_state.memory) << '\n';
    return kExitOk;
}

int cmd_estimate(const CommonRun& o) {
    const Architecture arch = load_architecture(o.arch);
    const CharacterizationModel model = load_characterization(o.characterization);
    std::vector<std::string> warnings;
    const Kernel kernel = load_kernel(o.kernel, arch, &warnings);
    const MemoryImage mem0 = memory_for(o, arch, warnings);
    EstimateOptions opts;
    opts.fidelity = fidelity_case_from_string(o.fidelity);
    opts.max_steps = o.max_steps;
    opts.id = o.id;
    Estimate est = estimate(kernel, arch, model, mem0, opts);
    est.result.warnings.insert(est.result.warnings.begin(), warnings.begin(), warnings.end());
    print_warnings(est.result.warnings);
    write_report(est, arch, o.out, formats_from(o.format));
    std::cout << summary_line(est.result) << '\n';
    return kExitOk;
}

int cmd_sweep(const CommonRun& o, const std::string& spec_path, unsigned jobs) {
    SweepInputs in;
    in.kernel = o.kernel;
    in.characterization = o.characterization;
    if (!o.memory.empty()) in.memory = fs::path(o.memory);
    in.spec = load_sweep_spec(spec_path);
    in.options.fidelity = fidelity_case_from_string(o.fidelity);
    in.options.max_steps = o.max_steps;
    in.jobs = jobs;
    const SweepResult res = run_sweep(in);
    const OutputFormats fmts = formats_from(o.format);
    for (const auto& r : res.runs) {
        print_warnings(r.estimate.result.warnings);
        write_report(r.estimate, r.arch, fs::path(o.out) / r.name, fmts);
        std::cout << summary_line(r.estimate.result) << '\n';
    }
    print_warnings(res.comparison.warnings);
    write_file(fs::path(o.out) / "comparison.json", to_json(res.comparison).dump(2) + "\n");
    write_file(fs::path(o.out) / "comparison.csv", comparison_csv(res.comparison));
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& baseline, const std::string& out) {
    std::vector<RunResult> runs;
    for (const auto& p : reports) runs.push_back(load_run_result(p));
    const Comparison c = compare_runs(runs, baseline.empty() ? runs.front().id : baseline);
    print_warnings(c.warnings);
    write_file(fs::path(out) / "comparison.json", to_json(c).dump(2) + "\n");
    write_file(fs::path(out) / "comparison.csv", comparison_csv(c));
    std::cout << comparison_csv(c);
    return kExitOk;
}

int cmd_encode(const std::string& kernel_path, const std::string& arch_path, const std::string& out) {
    const Architecture arch = load_architecture(arch_path);
    std::vector<std::string> warnings;
    const Kernel kernel = load_kernel(kernel_path, arch, &warnings);
    print_warnings(warnings);
    const auto bytes = encode_bitstream(kernel, arch);
    write_file(out, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    std::cout << kernel.name << ": " << kernel.size() << " instructions, " << bytes.size() << " bytes\n";
    return kExitOk;
}

int cmd_decode(const std::string& bin_path, const std::string& arch_path, const std::string& out) {
    const Architecture arch = load_architecture(arch_path);
    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + bin_path);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Kernel k = decode_bitstream(bytes, arch);
    k.name = fs::path(bin_path).stem().string();
    const std::string text = render_kernel(k);
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    return kExitOk;
}

int cmd_lint(const std::string& arch_path, const std::string& char_path, const std::string& kernel_path) {
    if (arch_path.empty() && char_path.empty()) throw CLI::ValidationError("lint", "give --arch and/or --char");
    if (!kernel_path.empty() && arch_path.empty()) throw CLI::ValidationError("lint", "--kernel needs --arch");
    if (!arch_path.empty()) {
        const Architecture a = load_architecture(arch_path);
        std::cout << arch_path << ": ok (" << a.rows << "x" << a.cols << ", " << to_string(a.mem.bus) << ", "
                  << to_string(a.mem.dma) << ")\n";
        if (!kernel_path.empty()) {
            std::vector<std::string> warnings;
            const Kernel k = load_kernel(kernel_path, a, &warnings);
            print_warnings(warnings);
            std::cout << kernel_path << ": ok (" << k.size() << " instructions)\n";
        }
    }
    if (!char_path.empty()) {
        load_characterization(char_path);
        std::cout << char_path << ": ok\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CGRA behavioral simulator and power/latency/energy estimator"};
    app.require_subcommand(1);

    CommonRun o;
    std::string trace_path, spec_path, baseline, bin_path, out_file;
    std::vector<std::string> reports;
    unsigned jobs = 1;

    auto* sim = app.add_subcommand("simulate", "run a kernel functionally and dump its final memory");
    sim->add_option("--kernel", o.kernel)->required()->check(CLI::ExistingFile);
    sim->add_option("--arch", o.arch)->required()->check(CLI::ExistingFile);
    sim->add_option("--mem", o.memory)->check(CLI::ExistingFile);
    sim->add_option("--trace", trace_path, "write the step trace as JSON lines");
    add_case_flags(sim, o);
    add_output_flags(sim, o);

    auto* est = app.add_subcommand("estimate", "simulate and estimate latency, energy and power");
    est->add_option("--kernel", o.kernel)->required()->check(CLI::ExistingFile);
    est->add_option("--arch", o.arch)->required()->check(CLI::ExistingFile);
    est->add_option("--char", o.characterization)->required()->check(CLI::ExistingFile);
    est->add_option("--mem", o.memory)->check(CLI::ExistingFile);
    est->add_option("--id", o.id, "run id (default: kernel name)");
    add_case_flags(est, o);
    add_output_flags(est, o);

    auto* swp = app.add_subcommand("sweep", "estimate one kernel over several hardware variants");
    swp->add_option("--kernel", o.kernel)->required()->check(CLI::ExistingFile);
    swp->add_option("--char", o.characterization)->required()->check(CLI::ExistingFile);
    swp->add_option("--spec", spec_path, "sweep spec JSON")->required()->check(CLI::ExistingFile);
    swp->add_option("--mem", o.memory)->check(CLI::ExistingFile);
    swp->add_option("--jobs", jobs, "concurrent variant runs")->check(CLI::Range(1U, 256U));
    add_case_flags(swp, o);
    add_output_flags(swp, o);

    auto* cmp = app.add_subcommand("compare", "normalize report.json files against a baseline run");
    cmp->add_option("reports", reports, "report.json files")->required()->check(CLI::ExistingFile);
    cmp->add_option("--baseline", baseline, "baseline run id (default: first report)");
    cmp->add_option("--out", o.out, "output directory");

    auto* enc = app.add_subcommand("encode", "assemble a kernel into a bitstream");
    enc->add_option("--kernel", o.kernel)->required()->check(CLI::ExistingFile);
    enc->add_option("--arch", o.arch)->required()->check(CLI::ExistingFile);
    enc->add_option("-o,--output", out_file)->required();

    auto* dec = app.add_subcommand("decode", "disassemble a bitstream into kernel text");
    dec->add_option("bitstream", bin_path)->required()->check(CLI::ExistingFile);
    dec->add_option("--arch", o.arch)->required()->check(CLI::ExistingFile);
    dec->add_option("-o,--output", out_file, "default: stdout");

    auto* lnt = app.add_subcommand("lint", "validate architecture, characterization and kernel files");
    lnt->add_option("--arch", o.arch)->check(CLI::ExistingFile);
    lnt->add_option("--char", o.characterization)->check(CLI::ExistingFile);
    lnt->add_option("--kernel", o.kernel)->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
        if (*sim) return cmd_simulate(o, trace_path);
        if (*est) return cmd_estimate(o);
        if (*swp) return cmd_sweep(o, spec_path, jobs);
        if (*cmp) return cmd_compare(reports, baseline, o.out);
        if (*enc) return cmd_encode(o.kernel, o.arch, out_file);
        if (*dec) return cmd_decode(bin_path, o.arch, out_file);
        if (*lnt) return cmd_lint(o.arch, o.characterization, o.kernel);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    } catch (const SimError& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return kExitSim;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitUsage;
}
