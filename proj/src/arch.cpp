#include "cgra/arch.hpp"

#include "cgra/errors.hpp"
#include "json_util.hpp"

namespace cgra {

std::string_view to_string(BusKind k) {
    switch (k) {
        case BusKind::OneToM: return "one_to_m";
        case BusKind::NToM: return "n_to_m";
        case BusKind::Interleaved: return "interleaved";
    }
    return "unknown";
}

std::string_view to_string(DmaKind k) {
    switch (k) {
        case DmaKind::PerColumn: return "per_column";
        case DmaKind::PerPE: return "per_pe";
    }
    return "unknown";
}

BusKind bus_kind_from_string(std::string_view s) {
    if (s == "one_to_m") return BusKind::OneToM;
    if (s == "n_to_m") return BusKind::NToM;
    if (s == "interleaved") return BusKind::Interleaved;
    throw ValidationError("mem.bus", "unknown bus kind '" + std::string(s) + "'");
}

DmaKind dma_kind_from_string(std::string_view s) {
    if (s == "per_column") return DmaKind::PerColumn;
    if (s == "per_pe") return DmaKind::PerPE;
    throw ValidationError("mem.dma", "unknown DMA placement '" + std::string(s) + "'");
}

Direction opposite(Direction d) {
    switch (d) {
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
        case Direction::Top: return Direction::Bottom;
        case Direction::Bottom: return Direction::Top;
    }
    return d;
}

void validate(const Architecture& a) {
    if (a.rows < 1) throw ValidationError("rows", "must be >= 1");
    if (a.cols < 1) throw ValidationError("cols", "must be >= 1");
    if (a.registers_per_pe < 1) throw ValidationError("registers_per_pe", "must be >= 1");
    if (a.word_bytes < 1) throw ValidationError("word_bytes", "must be >= 1");
    if (!(a.clock_period_ns > 0.0)) throw ValidationError("clock_period_ns", "must be > 0");
    if (a.mul_latency_cc && *a.mul_latency_cc < 1) throw ValidationError("mul_latency_cc", "must be >= 1");
    if (a.mem.n_banks < 1) throw ValidationError("mem.n_banks", "must be >= 1");
    if (a.mem.bank_words < 1) throw ValidationError("mem.bank_words", "must be >= 1");
    if (a.mem.mem_latency_cc < 1) throw ValidationError("mem.mem_latency_cc", "must be >= 1");
}

namespace {

std::uint32_t positive_u32(std::int64_t v, const char* field) {
    if (v < 1 || v > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError(field, "must be a positive 32-bit integer");
    return static_cast<std::uint32_t>(v);
}

int checked_int(std::int64_t v, const char* field) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ValidationError(field, "out of range");
    return static_cast<int>(v);
}

MemorySubsystem memory_from_json(const nlohmann::json& j) {
    using namespace detail;
    const std::string where = "mem.";
    expect_object(j, "mem");
    reject_unknown_keys(j, {"bus", "n_banks", "bank_words", "dma", "mem_latency_cc", "extra_contention_cc"},
                        "mem");
    for (const char* k : {"bus", "n_banks", "bank_words", "dma", "mem_latency_cc"}) require_key(j, k, "mem");

    MemorySubsystem m;
    m.bus = bus_kind_from_string(get_string(j, "bus", where));
    m.dma = dma_kind_from_string(get_string(j, "dma", where));
    m.n_banks = positive_u32(get_int(j, "n_banks", where), "mem.n_banks");
    m.bank_words = positive_u32(get_int(j, "bank_words", where), "mem.bank_words");
    m.mem_latency_cc = positive_u32(get_int(j, "mem_latency_cc", where), "mem.mem_latency_cc");
    if (j.contains("extra_contention_cc")) {
        const auto v = get_int(j, "extra_contention_cc", where);
        if (v < 0) throw ValidationError("mem.extra_contention_cc", "must be >= 0");
        m.extra_contention_cc = static_cast<std::uint32_t>(v);
    }
    return m;
}

}  // namespace

Architecture architecture_from_json(const nlohmann::json& j) {
    using namespace detail;
    expect_object(j, "architecture");
    reject_unknown_keys(j,
                        {"name", "note", "rows", "cols", "torus", "registers_per_pe", "word_bytes",
                         "clock_period_ns", "mul_latency_cc", "mem"},
                        "architecture");
    for (const char* k : {"rows", "cols", "clock_period_ns", "mem"}) require_key(j, k, "architecture");

    Architecture a;
    if (j.contains("name")) a.name = get_string(j, "name", "");
    if (j.contains("note")) (void)get_string(j, "note", "");
    a.rows = checked_int(get_int(j, "rows", ""), "rows");
    a.cols = checked_int(get_int(j, "cols", ""), "cols");
    if (j.contains("torus")) a.torus = get_bool(j, "torus", "");
    if (j.contains("registers_per_pe"))
        a.registers_per_pe = checked_int(get_int(j, "registers_per_pe", ""), "registers_per_pe");
    if (j.contains("word_bytes")) a.word_bytes = checked_int(get_int(j, "word_bytes", ""), "word_bytes");
    a.clock_period_ns = get_number(j, "clock_period_ns", "");
    if (j.contains("mul_latency_cc") && !j.at("mul_latency_cc").is_null())
        a.mul_latency_cc = positive_u32(get_int(j, "mul_latency_cc", ""), "mul_latency_cc");
    a.mem = memory_from_json(j.at("mem"));
    validate(a);
    return a;
}

nlohmann::json to_json(const Architecture& a) {
    nlohmann::json mem = {
        {"bus", std::string(to_string(a.mem.bus))},
        {"n_banks", a.mem.n_banks},
        {"bank_words", a.mem.bank_words},
        {"dma", std::string(to_string(a.mem.dma))},
        {"mem_latency_cc", a.mem.mem_latency_cc},
        {"extra_contention_cc", a.mem.extra_contention_cc},
    };
    nlohmann::json j = {
        {"name", a.name},
        {"rows", a.rows},
        {"cols", a.cols},
        {"torus", a.torus},
        {"registers_per_pe", a.registers_per_pe},
        {"word_bytes", a.word_bytes},
        {"clock_period_ns", a.clock_period_ns},
        {"mem", mem},
    };
    if (a.mul_latency_cc) j["mul_latency_cc"] = *a.mul_latency_cc;
    return j;
}

Architecture load_architecture(const std::filesystem::path& path) {
    const auto j = detail::parse_json_file(path);
    Architecture a = architecture_from_json(j);
    if (!j.contains("name")) a.name = path.stem().string();
    return a;
}

std::optional<PECoord> neighbor_of(const Architecture& arch, PECoord at, Direction dir) {
    int r = at.row;
    int c = at.col;
    switch (dir) {
        case Direction::Left: --c; break;
        case Direction::Right: ++c; break;
        case Direction::Top: --r; break;
        case Direction::Bottom: ++r; break;
    }
    if (arch.torus) {
        r = (r + arch.rows) % arch.rows;
        c = (c + arch.cols) % arch.cols;
        return PECoord{r, c};
    }
    PECoord n{r, c};
    if (!arch.contains(n)) return std::nullopt;
    return n;
}

std::uint32_t bank_of(const MemorySubsystem& mem, std::uint64_t word_addr) {
    if (word_addr >= mem.capacity_words())
        throw AddressOutOfRange("word address " + std::to_string(word_addr) + " beyond capacity of " +
                                std::to_string(mem.capacity_words()) + " words");
    switch (mem.bus) {
        case BusKind::OneToM: return 0;
        case BusKind::NToM: return static_cast<std::uint32_t>(word_addr / mem.bank_words);
        case BusKind::Interleaved: return static_cast<std::uint32_t>(word_addr % mem.n_banks);
    }
    return 0;
}

}  // namespace cgra
