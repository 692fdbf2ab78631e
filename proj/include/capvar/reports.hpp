#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capvar/lexstats.hpp"
#include "capvar/stats.hpp"

namespace capvar {

// printf-style fixed formatting; negative zero prints without the sign.
std::string format_fixed(double value, int decimals);

// Columns: source asl sdsl n_types ttr1 ttr2 n_captions n_tokens
std::string lexstats_tsv(std::span<const SourceLexReport> rows);

struct VarianceTestRow {
  std::string scorer;
  std::string data_tag;
  PairedTestResult result;
};

// Columns: scorer data_tag mean_h sd_h mean_m sd_m t df p_stars dz
std::string variance_test_tsv(std::span<const VarianceTestRow> rows);

struct DescriberRow {
  std::string scorer;
  std::string data_tag;
  DescriberSurprisal summary;
};

// Per-source mean surprisal and across-image variance +- SD.
std::string per_model_surprisal_tsv(std::span<const DescriberRow> rows);

// Per-image variances at full precision; read back by parse_variances_tsv.
std::string variances_tsv(std::span<const VarianceRecord> records);
std::vector<VarianceRecord> parse_variances_tsv(std::string_view text);

}  // namespace capvar
