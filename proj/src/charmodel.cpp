#include "cgra/charmodel.hpp"

#include <cctype>
#include <cmath>

#include "cgra/errors.hpp"
#include "json_util.hpp"

namespace cgra {

std::string_view to_string(FidelityCase c) {
    switch (c) {
        case FidelityCase::I: return "i";
        case FidelityCase::II: return "ii";
        case FidelityCase::III: return "iii";
        case FidelityCase::IV: return "iv";
        case FidelityCase::V: return "v";
        case FidelityCase::VI: return "vi";
    }
    return "?";
}

FidelityCase fidelity_case_from_string(std::string_view s) {
    std::string lower(s);
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    for (auto c : kAllCases) {
        if (lower == to_string(c) || lower == std::to_string(static_cast<int>(c))) return c;
    }
    throw ValidationError("case", "unknown fidelity case '" + std::string(s) + "' (expected i..vi)");
}

void lint(const CharacterizationModel& m) {
    std::vector<std::string> f;
    if (m.uniform_latency_cc < 1) f.push_back("uniform_latency_cc must be >= 1");
    if (!(m.uniform_power_mw > 0.0)) f.push_back("uniform_power_mw must be > 0");
    for (auto op : kAllOpcodes) {
        if (m.op_latency_cc[index(op)] < 1)
            f.push_back("op_latency_cc." + std::string(mnemonic(op)) + " must be >= 1");
        if (!(m.op_power_mw[index(op)] > 0.0))
            f.push_back("op_power_mw." + std::string(mnemonic(op)) + " must be > 0");
    }
    if (!(m.idle_power_mw >= 0.0)) f.push_back("idle_power_mw must be >= 0");
    if (!(m.decode_power_mw >= 0.0)) f.push_back("decode_power_mw must be >= 0");
    if (!(m.switch_energy_pj >= 0.0)) f.push_back("switch_energy_pj must be >= 0");
    if (!(m.src_power_adder_mw.imm_mw >= 0.0)) f.push_back("src_power_adder_mw.imm must be >= 0");
    if (!(m.src_power_adder_mw.reg_mw >= 0.0)) f.push_back("src_power_adder_mw.reg must be >= 0");
    if (!(m.src_power_adder_mw.neighbor_mw >= 0.0)) f.push_back("src_power_adder_mw.neighbor must be >= 0");
    if (!(m.mul_zero_power_mw > 0.0)) f.push_back("mul_zero_power_mw must be > 0");
    if (!f.empty()) throw LintError(std::move(f));
}

namespace {

// Reads a numeric field, recording a finding instead of throwing on type errors.
template <typename T>
void read_number(const nlohmann::json& j, const char* key, T& out, std::vector<std::string>& findings,
                 const std::string& prefix = "") {
    const auto& v = j.at(key);
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            findings.push_back(prefix + key + " must be an integer");
            return;
        }
        const auto x = v.get<std::int64_t>();
        if (x < 0 || x > std::numeric_limits<T>::max()) {
            findings.push_back(prefix + key + " out of range");
            return;
        }
        out = static_cast<T>(x);
    } else {
        if (!v.is_number()) {
            findings.push_back(prefix + key + " must be a number");
            return;
        }
        out = v.get<double>();
    }
}

template <typename T>
void read_op_map(const nlohmann::json& j, const char* key, std::array<T, kOpcodeCount>& out,
                 std::vector<std::string>& findings) {
    const auto& m = j.at(key);
    if (!m.is_object()) {
        findings.push_back(std::string(key) + " must be an object keyed by mnemonic");
        return;
    }
    for (const auto& [name, _] : m.items()) {
        if (!opcode_from_mnemonic(name) || name != mnemonic(*opcode_from_mnemonic(name)))
            findings.push_back(std::string(key) + ": unknown opcode '" + name + "'");
    }
    for (auto op : kAllOpcodes) {
        const std::string mn(mnemonic(op));
        if (!m.contains(mn)) {
            findings.push_back(std::string(key) + ": missing entry for " + mn);
            continue;
        }
        read_number(m, mn.c_str(), out[index(op)], findings, std::string(key) + ".");
    }
}

}  // namespace

CharacterizationModel characterization_from_json(const nlohmann::json& j) {
    using namespace detail;
    expect_object(j, "characterization");
    reject_unknown_keys(j,
                        {"name", "note", "uniform_latency_cc", "uniform_power_mw", "op_latency_cc", "op_power_mw",
                         "idle_power_mw", "decode_power_mw", "decode_cycles", "switch_energy_pj",
                         "src_power_adder_mw", "mul_zero_power_mw"},
                        "characterization");
    for (const char* k : {"uniform_latency_cc", "uniform_power_mw", "op_latency_cc", "op_power_mw"})
        require_key(j, k, "characterization");

    CharacterizationModel m;
    if (j.contains("name")) m.name = get_string(j, "name", "");
    std::vector<std::string> findings;
    read_number(j, "uniform_latency_cc", m.uniform_latency_cc, findings);
    read_number(j, "uniform_power_mw", m.uniform_power_mw, findings);
    read_op_map(j, "op_latency_cc", m.op_latency_cc, findings);
    read_op_map(j, "op_power_mw", m.op_power_mw, findings);
    if (j.contains("idle_power_mw")) read_number(j, "idle_power_mw", m.idle_power_mw, findings);
    if (j.contains("decode_power_mw")) read_number(j, "decode_power_mw", m.decode_power_mw, findings);
    if (j.contains("decode_cycles")) {
        if (j.at("decode_cycles").is_number_integer() && j.at("decode_cycles").get<std::int64_t>() < 0)
            findings.push_back("decode_cycles must be >= 0");
        else
            read_number(j, "decode_cycles", m.decode_cycles, findings);
    }
    if (j.contains("switch_energy_pj")) read_number(j, "switch_energy_pj", m.switch_energy_pj, findings);
    if (j.contains("src_power_adder_mw")) {
        const auto& a = j.at("src_power_adder_mw");
        if (!a.is_object()) {
            findings.push_back("src_power_adder_mw must be an object");
        } else {
            for (const auto& [k, _] : a.items())
                if (k != "imm" && k != "reg" && k != "neighbor")
                    findings.push_back("src_power_adder_mw: unknown class '" + k + "'");
            if (a.contains("imm")) read_number(a, "imm", m.src_power_adder_mw.imm_mw, findings, "src_power_adder_mw.");
            if (a.contains("reg")) read_number(a, "reg", m.src_power_adder_mw.reg_mw, findings, "src_power_adder_mw.");
            if (a.contains("neighbor"))
                read_number(a, "neighbor", m.src_power_adder_mw.neighbor_mw, findings, "src_power_adder_mw.");
        }
    }
    // Without a measured value, multiplying by zero costs the same as any SMUL.
    m.mul_zero_power_mw = m.op_power_mw[index(Opcode::SMUL)];
    if (j.contains("mul_zero_power_mw")) read_number(j, "mul_zero_power_mw", m.mul_zero_power_mw, findings);

    if (!findings.empty()) throw LintError(std::move(findings));
    lint(m);
    return m;
}

nlohmann::json to_json(const CharacterizationModel& m) {
    nlohmann::json lat = nlohmann::json::object();
    nlohmann::json pow = nlohmann::json::object();
    for (auto op : kAllOpcodes) {
        lat[std::string(mnemonic(op))] = m.op_latency_cc[index(op)];
        pow[std::string(mnemonic(op))] = m.op_power_mw[index(op)];
    }
    return {
        {"name", m.name},
        {"uniform_latency_cc", m.uniform_latency_cc},
        {"uniform_power_mw", m.uniform_power_mw},
        {"op_latency_cc", lat},
        {"op_power_mw", pow},
        {"idle_power_mw", m.idle_power_mw},
        {"decode_power_mw", m.decode_power_mw},
        {"decode_cycles", m.decode_cycles},
        {"switch_energy_pj", m.switch_energy_pj},
        {"src_power_adder_mw",
         {{"imm", m.src_power_adder_mw.imm_mw},
          {"reg", m.src_power_adder_mw.reg_mw},
          {"neighbor", m.src_power_adder_mw.neighbor_mw}}},
        {"mul_zero_power_mw", m.mul_zero_power_mw},
    };
}

CharacterizationModel load_characterization(const std::filesystem::path& path) {
    const auto j = detail::parse_json_file(path);
    try {
        CharacterizationModel m = characterization_from_json(j);
        if (!j.contains("name")) m.name = path.stem().string();
        return m;
    } catch (const LintError& e) {
        auto f = e.findings();
        f.insert(f.begin(), "in " + path.string());
        throw LintError(std::move(f));
    }
}

EffectiveModel resolve(const CharacterizationModel& m, FidelityCase fc) {
    EffectiveModel e;
    e.fidelity = fc;
    e.uniform_latency_cc = m.uniform_latency_cc;

    if (fc >= FidelityCase::II)
        e.op_latency_cc = m.op_latency_cc;
    else
        e.op_latency_cc.fill(m.uniform_latency_cc);

    e.memory_contention = fc >= FidelityCase::III;

    if (fc >= FidelityCase::IV)
        e.op_power_mw = m.op_power_mw;
    else
        e.op_power_mw.fill(m.uniform_power_mw);

    if (fc >= FidelityCase::V) {
        e.phased_power = true;
        e.idle_power_mw = m.idle_power_mw;
        e.decode_power_mw = m.decode_power_mw;
        e.decode_cycles = m.decode_cycles;
    }

    if (fc >= FidelityCase::VI) {
        e.switch_energy_pj = m.switch_energy_pj;
        e.src_power_adder_mw = m.src_power_adder_mw;
        e.mul_zero_enabled = true;
        e.mul_zero_power_mw = m.mul_zero_power_mw;
    }
    return e;
}

}  // namespace cgra
