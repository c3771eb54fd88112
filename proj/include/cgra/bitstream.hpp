#pragma once

// Deployment bitstream.
//
//   header (8 bytes): 'C' 'G' 'R' 'K', u8 rows, u8 cols, u16 LE instruction count
//   body: one little-endian u32 per slot, instructions in order, slots row-major
//
//   bits [31:27] opcode | [26:23] src_a | [22:19] src_b | [18:16] dest | [15:0] imm

#include <cstdint>
#include <span>
#include <vector>

#include "cgra/arch.hpp"
#include "cgra/kernel.hpp"

namespace cgra {

inline constexpr std::size_t kBitstreamHeaderBytes = 8;

std::uint32_t encode_slot(const PESlot& slot);
/// Throws ValidationError on reserved opcode, source or destination codes.
PESlot decode_slot(std::uint32_t word);

std::vector<std::uint8_t> encode_bitstream(const Kernel& kernel, const Architecture& arch);
Kernel decode_bitstream(std::span<const std::uint8_t> bytes, const Architecture& arch);

}  // namespace cgra
