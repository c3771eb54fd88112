#pragma once

/**
 * @file arch.hpp
 * @brief CGRA hardware description: PE grid, neighbor topology and the
 *        memory subsystem the array shares with the rest of the MCU.
 *
 * Bank mapping per bus kind:
 *   - OneToM:      a single logical channel, every word maps to bank 0
 *   - NToM:        blocked, bank = word / bank_words
 *   - Interleaved: word-interleaved, bank = word % n_banks
 *
 * DMA channels are one per column (baseline) or one per PE.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cgra {

enum class BusKind : std::uint8_t { OneToM, NToM, Interleaved };
enum class DmaKind : std::uint8_t { PerColumn, PerPE };
enum class Direction : std::uint8_t { Left, Right, Top, Bottom };

std::string_view to_string(BusKind k);
std::string_view to_string(DmaKind k);
BusKind bus_kind_from_string(std::string_view s);
DmaKind dma_kind_from_string(std::string_view s);
Direction opposite(Direction d);

struct MemorySubsystem {
    BusKind bus{BusKind::OneToM};
    std::uint32_t n_banks{4};
    std::uint32_t bank_words{4096};
    DmaKind dma{DmaKind::PerColumn};
    std::uint32_t mem_latency_cc{4};
    // Fixed cycles added to every granted access; stands in for traffic from
    // other bus masters. Zero unless the architecture file sets it.
    std::uint32_t extra_contention_cc{0};

    std::uint64_t capacity_words() const {
        return static_cast<std::uint64_t>(n_banks) * bank_words;
    }
    std::uint32_t access_latency_cc() const { return mem_latency_cc + extra_contention_cc; }
};

struct PECoord {
    int row{0};
    int col{0};
    friend bool operator==(const PECoord&, const PECoord&) = default;
};

struct Architecture {
    std::string name{"arch"};
    int rows{4};
    int cols{4};
    bool torus{true};
    int registers_per_pe{4};
    int word_bytes{4};
    double clock_period_ns{10.0};
    MemorySubsystem mem{};
    std::optional<std::uint32_t> mul_latency_cc{};

    int pe_count() const { return rows * cols; }
    int linear_index(PECoord c) const { return c.row * cols + c.col; }
    PECoord coord_of(int linear) const { return {linear / cols, linear % cols}; }
    bool contains(PECoord c) const {
        return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
    }
    std::uint64_t capacity_bytes() const {
        return mem.capacity_words() * static_cast<std::uint64_t>(word_bytes);
    }
};

/// Throws ValidationError naming the first offending field.
void validate(const Architecture& arch);

Architecture architecture_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Architecture& arch);

/// Reads and validates an architecture file; the name defaults to the file stem.
Architecture load_architecture(const std::filesystem::path& path);

std::optional<PECoord> neighbor_of(const Architecture& arch, PECoord at, Direction dir);

/// Throws AddressOutOfRange when word_addr is outside n_banks * bank_words.
std::uint32_t bank_of(const MemorySubsystem& mem, std::uint64_t word_addr);

}  // namespace cgra
