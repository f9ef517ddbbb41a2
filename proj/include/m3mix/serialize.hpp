#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "m3mix/finite_m3.hpp"
#include "m3mix/hybrid_m3.hpp"
#include "m3mix/infinite_m3.hpp"

namespace m3mix {

// JSON model files. Every document carries "schemaVersion" (currently 1) and a
// "type" tag; loading any other version throws UnsupportedVersionError, malformed
// or truncated text throws ParseError. Doubles are written in shortest
// round-trip form, so load(save(x)) is bit-exact.
inline constexpr int kSchemaVersion = 1;

std::string finiteModelToJson(const FiniteM3Model& model);
FiniteM3Model finiteModelFromJson(const std::string& text);
void saveFiniteModel(const std::filesystem::path& path, const FiniteM3Model& model);
FiniteM3Model loadFiniteModel(const std::filesystem::path& path);

// Chain files hold the data once plus every retained sample.
std::string infiniteChainToJson(std::span<const InfiniteM3State> samples);
std::vector<InfiniteM3State> infiniteChainFromJson(const std::string& text);
void saveInfiniteChain(const std::filesystem::path& path, std::span<const InfiniteM3State> samples);
std::vector<InfiniteM3State> loadInfiniteChain(const std::filesystem::path& path);

std::string hybridChainToJson(std::span<const HybridState> samples);
std::vector<HybridState> hybridChainFromJson(const std::string& text);
void saveHybridChain(const std::filesystem::path& path, std::span<const HybridState> samples);
std::vector<HybridState> loadHybridChain(const std::filesystem::path& path);

// Reads the "type" tag of a model file without validating the rest.
std::string modelFileType(const std::filesystem::path& path);

}  // namespace m3mix
