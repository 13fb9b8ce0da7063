#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "confide/types.hpp"

namespace confide {

enum class FileFormat { Csv, Jsonl };

/// Guesses Csv vs Jsonl from the file extension (.jsonl/.json => Jsonl).
FileFormat format_from_path(const std::filesystem::path& path);

/// CSV schema: header `human_label,true_label,p_0,...,p_{K-1}`, true_label
/// empty when unknown. JSONL schema: {"h": int, "y": int|null, "m": [K floats]}
/// per line. K is inferred from the header / first row. Errors carry the
/// 1-based line number.
CombinationDataset load_dataset(const std::filesystem::path& path, FileFormat format);
CombinationDataset load_dataset(const std::filesystem::path& path);

void save_dataset(const CombinationDataset& data, const std::filesystem::path& path,
                  FileFormat format);
void save_dataset(const CombinationDataset& data, const std::filesystem::path& path);

/// Seeded shuffle, then split with |eval| = round(eval_fraction * n).
/// Throws EmptySplit if either side would be empty.
std::pair<CombinationDataset, CombinationDataset>
split_dataset(const CombinationDataset& data, double eval_fraction, std::uint64_t seed);

/// Dataset restricted to the given row indices (in the given order).
CombinationDataset subset(const CombinationDataset& data, std::span<const std::size_t> indices);

} // namespace confide
