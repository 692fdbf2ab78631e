#include "capvar/reports.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "capvar/error.hpp"

namespace capvar {

namespace {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string lexstats_tsv(std::span<const SourceLexReport> rows) {
  std::string out = "source\tasl\tsdsl\tn_types\tttr1\tttr2\tn_captions\tn_tokens\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += row.source + '\t' + format_fixed(r.asl, 2) + '\t' + format_fixed(r.sdsl, 2) + '\t' +
           std::to_string(r.n_types) + '\t' + format_fixed(r.ttr1, 2) + '\t' + format_fixed(r.ttr2, 2) + '\t' +
           std::to_string(r.n_captions) + '\t' + std::to_string(r.n_tokens) + '\n';
  }
  return out;
}

std::string variance_test_tsv(std::span<const VarianceTestRow> rows) {
  std::string out = "scorer\tdata_tag\tmean_h\tsd_h\tmean_m\tsd_m\tt\tdf\tp_stars\tdz\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    out += row.scorer + '\t' + row.data_tag + '\t' + format_fixed(r.mean_h, 3) + '\t' + format_fixed(r.sd_h, 3) +
           '\t' + format_fixed(r.mean_m, 3) + '\t' + format_fixed(r.sd_m, 3) + '\t' + format_fixed(r.t_value, 2) +
           '\t' + std::to_string(r.df) + '\t' + p_stars(r.p_two_sided) + '\t' + format_fixed(r.cohens_dz, 2) + '\n';
  }
  return out;
}

std::string per_model_surprisal_tsv(std::span<const DescriberRow> rows) {
  std::string out = "scorer\tdata_tag\tsource\tgroup\tn_captions\tmean_surprisal\tvariance\tsd\n";
  for (const auto& row : rows) {
    const auto& s = row.summary;
    out += row.scorer + '\t' + row.data_tag + '\t' + s.describer_id + '\t' + std::string(group_name(s.group)) +
           '\t' + std::to_string(s.n_captions) + '\t' + format_fixed(s.mean_surprisal, 3) + '\t' +
           format_fixed(s.variance, 3) + '\t' + format_fixed(s.sd, 3) + '\n';
  }
  return out;
}

std::string variances_tsv(std::span<const VarianceRecord> records) {
  std::string out = "scorer\timage_id\tgroup\tn_captions\tvariance\n";
  for (const auto& r : records) {
    out += r.scorer_id + '\t' + r.image_id + '\t' + std::string(group_name(r.group)) + '\t' +
           std::to_string(r.n_captions) + '\t' + format_g17(r.variance) + '\n';
  }
  return out;
}

std::vector<VarianceRecord> parse_variances_tsv(std::string_view text) {
  std::vector<VarianceRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 5) throw Error(ErrorCode::FormatError, where + "expected 5 columns");
    if (line_no == 1) {
      if (fields[0] != "scorer") throw Error(ErrorCode::FormatError, where + "missing header");
      continue;
    }
    VarianceRecord r;
    r.scorer_id = std::string(fields[0]);
    r.image_id = std::string(fields[1]);
    auto g = parse_group(fields[2]);
    if (!g) throw Error(ErrorCode::FormatError, where + "bad group");
    r.group = *g;
    std::string n(fields[3]), v(fields[4]);
    char* end = nullptr;
    r.n_captions = std::strtoull(n.c_str(), &end, 10);
    if (end == n.c_str() || *end) throw Error(ErrorCode::FormatError, where + "bad n_captions");
    r.variance = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end) throw Error(ErrorCode::FormatError, where + "bad variance");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace capvar
