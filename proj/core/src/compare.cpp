#include "splitkit/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "splitkit/errors.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/version.hpp"

namespace splitkit {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t pair_count(std::uint64_t n) { return n * (n - 1) / 2; }

// Merge sort counting strict inversions; ties contribute nothing.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t c = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid;
  for (std::size_t k = lo; k < hi; ++k) {
    if (j >= hi || (i < mid && v[i] <= v[j])) {
      buf[k] = v[i++];
    } else {
      buf[k] = v[j++];
      c += mid - i;
    }
  }
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return c;
}

std::uint64_t tie_pairs_sorted(const std::vector<double>& v) {
  std::uint64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i < v.size() && v[i] == v[i - 1]) {
      ++run;
    } else {
      total += pair_count(run);
      run = 1;
    }
  }
  return total;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Model ids carry an optional "#<hp digest>" suffix.
std::pair<std::string, std::string> split_model_id(const std::string& id) {
  const auto pos = id.find('#');
  if (pos == std::string::npos) return {id, ""};
  return {id.substr(0, pos), id.substr(pos + 1)};
}

std::size_t rank_of(const SystemRanking& ranking, const std::string& model) {
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (ranking.entries[i].model == model) return i + 1;
  }
  throw DataError("model " + model + " missing from ranking for " +
                  ranking.strategy);
}

// Arrow glyphs are 3 bytes each but occupy one terminal column.
std::size_t display_width(const std::string& s) {
  std::size_t bytes = s.size();
  std::size_t pos = 0;
  while ((pos = s.find("\xe2\x96", pos)) != std::string::npos) {
    bytes -= 2;
    pos += 3;
  }
  return bytes;
}

std::string pad_to(const std::string& s, std::size_t width) {
  std::string out = s;
  const std::size_t w = display_width(s);
  if (w < width) out.append(width - w, ' ');
  return out;
}

std::string annotate(std::int64_t displacement) {
  if (displacement == 0) return "=";
  if (displacement > 0) {
    return "\xe2\x96\xb2(" + std::to_string(displacement) + ")";
  }
  return "\xe2\x96\xbc(" + std::to_string(-displacement) + ")";
}

void check_model_sets(const SystemRanking& a, const SystemRanking& b) {
  std::set<std::string> sa, sb;
  for (const auto& e : a.entries) sa.insert(e.model);
  for (const auto& e : b.entries) sb.insert(e.model);
  if (sa == sb) return;
  std::string msg = "model sets differ between " + a.strategy + " and " +
                    b.strategy + ":";
  std::string only_a, only_b;
  for (const auto& m : sa) {
    if (!sb.count(m)) only_a += (only_a.empty() ? " " : ", ") + m;
  }
  for (const auto& m : sb) {
    if (!sa.count(m)) only_b += (only_b.empty() ? " " : ", ") + m;
  }
  if (!only_a.empty()) msg += " only in " + a.strategy + ":" + only_a + ";";
  if (!only_b.empty()) msg += " only in " + b.strategy + ":" + only_b + ";";
  throw DataError(msg);
}

}  // namespace

Metric parse_metric(std::string_view text) {
  if (text == "ndcg") return Metric::kNdcg;
  if (text == "recall") return Metric::kRecall;
  throw ConfigError("unknown metric '" + std::string(text) +
                    "' (expected ndcg or recall)");
}

std::string metric_name(Metric metric) {
  return metric == Metric::kNdcg ? "ndcg" : "recall";
}

TauDetail kendall_tau_detail(std::span<const double> x,
                             std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ConfigError("kendall tau needs paired lists of equal length, got " +
                      std::to_string(x.size()) + " and " +
                      std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 2) throw ConfigError("kendall tau needs at least 2 paired values");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DataError("kendall tau input contains a non-finite value");
    }
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const std::uint64_t n0 = pair_count(n);
  std::uint64_t n1 = 0, n3 = 0;
  {
    std::size_t run_x = 1, run_xy = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const bool boundary = i == n;
      const bool same_x = !boundary && x[idx[i]] == x[idx[i - 1]];
      const bool same_xy = same_x && y[idx[i]] == y[idx[i - 1]];
      if (same_xy) {
        ++run_xy;
      } else {
        n3 += pair_count(run_xy);
        run_xy = 1;
      }
      if (same_x) {
        ++run_x;
      } else {
        n1 += pair_count(run_x);
        run_x = 1;
      }
    }
  }

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  std::vector<double> buf(n);
  const std::uint64_t q = merge_count(ys, buf, 0, n);

  std::vector<double> y_sorted(ys);  // ys is now sorted after merge_count
  const std::uint64_t n2 = tie_pairs_sorted(y_sorted);

  if (n0 == n1) throw DataError("kendall tau undefined: all x values tied");
  if (n0 == n2) throw DataError("kendall tau undefined: all y values tied");

  TauDetail d;
  d.ties_x_only = n1 - n3;
  d.ties_y_only = n2 - n3;
  d.ties_both = n3;
  const std::uint64_t untied = (n0 - n1) - (n2 - n3);
  d.discordant = q;
  d.concordant = untied - q;
  d.tau = (static_cast<double>(d.concordant) -
           static_cast<double>(d.discordant)) /
          std::sqrt(static_cast<double>(n0 - n1) *
                    static_cast<double>(n0 - n2));
  return d;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  return kendall_tau_detail(x, y).tau;
}

std::vector<SystemRanking> build_rankings(
    const std::vector<EvalReport>& reports, Metric metric) {
  if (reports.empty()) throw ConfigError("no eval reports given");
  std::map<std::string, SystemRanking> by_strategy;
  std::set<std::pair<std::string, std::string>> seen;
  for (const EvalReport& r : reports) {
    if (!seen.insert({r.strategy, r.model_id}).second) {
      throw DataError("duplicate eval report for model " + r.model_id +
                      " under " + r.strategy);
    }
    const double score =
        metric == Metric::kNdcg ? r.mean_ndcg : r.mean_recall;
    if (!std::isfinite(score)) {
      throw DataError("non-finite " + metric_name(metric) + " for model " +
                      r.model_id + " under " + r.strategy);
    }
    SystemRanking& ranking = by_strategy[r.strategy];
    ranking.strategy = r.strategy;
    ranking.metric = metric_name(metric);
    ranking.entries.push_back({r.model_id, score});
  }
  std::vector<SystemRanking> out;
  for (auto& [_, ranking] : by_strategy) {
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.model < b.model;
              });
    out.push_back(std::move(ranking));
  }
  return out;
}

RankComparison compare_rankings(const SystemRanking& a,
                                const SystemRanking& b) {
  check_model_sets(a, b);
  RankComparison cmp;
  cmp.strategy_a = a.strategy;
  cmp.strategy_b = b.strategy;
  std::vector<double> x, y;
  x.reserve(a.entries.size());
  y.reserve(a.entries.size());
  for (const RankedEntry& e : a.entries) {
    x.push_back(e.score);
    y.push_back(b.entries[rank_of(b, e.model) - 1].score);
  }
  cmp.tau = kendall_tau_detail(x, y);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const std::string& model = a.entries[i].model;
    const std::int64_t ra = static_cast<std::int64_t>(i + 1);
    const std::int64_t rb = static_cast<std::int64_t>(rank_of(b, model));
    cmp.swaps.push_back({model, ra - rb});
  }
  return cmp;
}

RankSwapReport rank_swap_report(const std::vector<EvalReport>& reports,
                                Metric metric, const std::string& reference) {
  std::vector<SystemRanking> rankings = build_rankings(reports, metric);
  if (rankings.size() < 2) {
    throw ConfigError("rank swap report needs at least 2 strategies, got " +
                      std::to_string(rankings.size()));
  }
  const auto ref_it = std::find_if(
      rankings.begin(), rankings.end(),
      [&](const SystemRanking& r) { return r.strategy == reference; });
  if (ref_it == rankings.end()) {
    throw ConfigError("reference strategy " + reference +
                      " has no eval reports");
  }
  std::rotate(rankings.begin(), ref_it, ref_it + 1);

  RankSwapReport report;
  report.metric = metric_name(metric);
  report.reference = reference;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    for (std::size_t j = i + 1; j < rankings.size(); ++j) {
      report.comparisons.push_back(
          compare_rankings(rankings[i], rankings[j]));
    }
  }
  report.rankings = std::move(rankings);
  return report;
}

std::string render_table(const RankSwapReport& report) {
  const SystemRanking& ref = report.rankings.front();
  const std::size_t n = ref.entries.size();

  // Rows mirror the published convention: ascending reference score,
  // the weakest model first. Ranks still count 1 = best.
  std::vector<std::size_t> row_order(n);
  std::iota(row_order.begin(), row_order.end(), 0);
  std::reverse(row_order.begin(), row_order.end());

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header;
  header.push_back("model");
  for (const SystemRanking& r : report.rankings) header.push_back(r.strategy);
  cells.push_back(header);

  for (std::size_t row : row_order) {
    const std::string& model = ref.entries[row].model;
    std::vector<std::string> line;
    line.push_back(model);
    const std::size_t ref_rank = row + 1;
    for (const SystemRanking& r : report.rankings) {
      const std::size_t rank = rank_of(r, model);
      std::string cell = fmt_score(r.entries[rank - 1].score) + " (" +
                         std::to_string(rank) + ")";
      if (&r != &report.rankings.front()) {
        cell += " " + annotate(static_cast<std::int64_t>(ref_rank) -
                               static_cast<std::int64_t>(rank));
      }
      line.push_back(cell);
    }
    cells.push_back(line);
  }

  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(line[c]));
    }
  }

  std::string out = "metric=" + report.metric +
                    " reference=" + report.reference + "\n";
  for (const auto& line : cells) {
    std::string rendered;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) rendered += "  ";
      rendered += pad_to(line[c], widths[c]);
    }
    while (!rendered.empty() && rendered.back() == ' ') rendered.pop_back();
    out += rendered + "\n";
  }
  out += "\ntau per strategy pair:\n";
  for (const RankComparison& cmp : report.comparisons) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", cmp.tau.tau);
    out += "  " + cmp.strategy_a + " vs " + cmp.strategy_b + ": " + buf +
           "\n";
  }
  return out;
}

void write_comparison_json(const RankSwapReport& report,
                           const std::filesystem::path& path) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["toolkit_version"] = kVersion;
  j["metric"] = report.metric;
  j["reference"] = report.reference;
  json rankings = json::array();
  for (const SystemRanking& r : report.rankings) {
    json jr;
    jr["strategy"] = r.strategy;
    json entries = json::array();
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      json e;
      e["model"] = r.entries[i].model;
      e["score"] = r.entries[i].score;
      e["rank"] = i + 1;
      entries.push_back(std::move(e));
    }
    jr["entries"] = std::move(entries);
    rankings.push_back(std::move(jr));
  }
  j["rankings"] = std::move(rankings);
  json comparisons = json::array();
  for (const RankComparison& cmp : report.comparisons) {
    json jc;
    jc["strategy_a"] = cmp.strategy_a;
    jc["strategy_b"] = cmp.strategy_b;
    jc["tau"] = cmp.tau.tau;
    jc["concordant"] = cmp.tau.concordant;
    jc["discordant"] = cmp.tau.discordant;
    jc["ties_x_only"] = cmp.tau.ties_x_only;
    jc["ties_y_only"] = cmp.tau.ties_y_only;
    jc["ties_both"] = cmp.tau.ties_both;
    json swaps = json::array();
    for (const RankSwap& s : cmp.swaps) {
      json js;
      js["model"] = s.model;
      js["displacement"] = s.displacement;
      swaps.push_back(std::move(js));
    }
    jc["swaps"] = std::move(swaps);
    comparisons.push_back(std::move(jc));
  }
  j["comparisons"] = std::move(comparisons);
  write_text(path, j.dump(2) + "\n");
}

void write_comparison_csv(const RankSwapReport& report,
                          const std::filesystem::path& path) {
  const SystemRanking& ref = report.rankings.front();
  std::string out = "model,strategy,score,rank,displacement\n";
  for (const SystemRanking& r : report.rankings) {
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      const RankedEntry& e = r.entries[i];
      const std::size_t ref_rank = rank_of(ref, e.model);
      const std::int64_t d = static_cast<std::int64_t>(ref_rank) -
                             static_cast<std::int64_t>(i + 1);
      out += escape_field(e.model, ',');
      out.push_back(',');
      out += escape_field(r.strategy, ',');
      out.push_back(',');
      out += fmt_double(e.score);
      out.push_back(',');
      out += std::to_string(i + 1);
      out.push_back(',');
      out += std::to_string(d);
      out.push_back('\n');
    }
  }
  write_text(path, out);
}

void write_scatter_csv(const SystemRanking& a, const SystemRanking& b,
                       const std::filesystem::path& path) {
  check_model_sets(a, b);
  std::vector<std::string> models;
  for (const RankedEntry& e : a.entries) models.push_back(e.model);
  std::sort(models.begin(), models.end());
  std::string out = "x_score,y_score,model,hp_digest\n";
  for (const std::string& m : models) {
    const double xs = a.entries[rank_of(a, m) - 1].score;
    const double ys = b.entries[rank_of(b, m) - 1].score;
    const auto [base, hp] = split_model_id(m);
    out += fmt_double(xs);
    out.push_back(',');
    out += fmt_double(ys);
    out.push_back(',');
    out += escape_field(base, ',');
    out.push_back(',');
    out += escape_field(hp, ',');
    out.push_back('\n');
  }
  write_text(path, out);
}

}  // namespace splitkit
