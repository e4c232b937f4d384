#include "revieweval/analytics.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace revieweval::analytics {

using json = nlohmann::json;

std::size_t metric_index(std::string_view name) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (kMetricNames[i] == name) return i;
    }
    throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

bool MetricVector::complete() const noexcept {
    return std::all_of(values.begin(), values.end(), [](const auto& v) { return v && std::isfinite(*v); });
}

std::array<double, kMetricCount> MetricVector::require() const {
    std::array<double, kMetricCount> out{};
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!values[i] || !std::isfinite(*values[i])) {
            throw Error(Errc::IncompleteVector, "metric '" + std::string(kMetricNames[i]) + "' missing for " +
                                                    model_id + "/" + paper_id);
        }
        out[i] = *values[i];
    }
    return out;
}

double unified_score(const MetricVector& v) {
    double sum = 0.0;
    for (double x : v.require()) sum += x;
    return sum / static_cast<double>(kMetricCount);
}

std::array<LeaveOneOut, kMetricCount> leave_one_out(const MetricVector& v) {
    const auto vals = v.require();
    double total = 0.0;
    for (double x : vals) total += x;
    const double unified = total / static_cast<double>(kMetricCount);
    std::array<LeaveOneOut, kMetricCount> out;
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        double rest = 0.0;
        for (std::size_t j = 0; j < kMetricCount; ++j) {
            if (j != i) rest += vals[j];
        }
        out[i].adjusted = rest / static_cast<double>(kMetricCount - 1);
        out[i].abs_change = out[i].adjusted - unified;
        if (unified != 0.0) out[i].rel_change = out[i].abs_change / unified;
    }
    return out;
}

std::array<double, kMetricCount> contributions(const MetricVector& v) {
    const auto vals = v.require();
    double total = 0.0;
    for (double x : vals) total += x;
    if (!(total > 0.0)) throw Error(Errc::ZeroUnified, "unified score is 0; contributions undefined");
    // (value/6)/(total/6) * 100, with the sixths cancelled.
    std::array<double, kMetricCount> out{};
    for (std::size_t i = 0; i < kMetricCount; ++i) out[i] = vals[i] / total * 100.0;
    return out;
}

// ---------------------------------------------------------------------------
// Pearson
// ---------------------------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(Errc::InvalidArgument, "incomplete_beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
    if (!(df > 0.0)) throw Error(Errc::InvalidArgument, "degrees of freedom must be > 0");
    if (std::isnan(t)) throw Error(Errc::InvalidArgument, "t statistic is NaN");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "pearson samples differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw Error(Errc::InsufficientRows, "pearson needs at least 3 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(Errc::ConstantInput, "sample has zero variance");
    PearsonResult res;
    res.n = n;
    res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    // Exactly linear samples land a few ulps short of 1 through accumulated rounding.
    constexpr double kSnap = 64.0 * std::numeric_limits<double>::epsilon();
    if (1.0 - std::fabs(res.r) <= kSnap) res.r = std::copysign(1.0, res.r);
    const double df = static_cast<double>(n - 2);
    const double one_minus = 1.0 - res.r * res.r;
    if (one_minus <= 0.0) {
        res.p = 0.0;
    } else {
        res.p = student_t_two_sided(res.r * std::sqrt(df / one_minus), df);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

AveragingTable averaging_table(std::span<const MetricVector> rows) {
    AveragingTable t;
    std::array<double, kMetricCount> abs_sum{}, rel_sum{}, contrib_sum{};
    std::size_t with_rel = 0;
    for (const auto& row : rows) {
        if (!row.complete()) {
            ++t.rows_dropped;
            continue;
        }
        ++t.rows_used;
        auto loo = leave_one_out(row);
        for (std::size_t i = 0; i < kMetricCount; ++i) abs_sum[i] += loo[i].abs_change;
        if (!loo[0].rel_change) {
            ++t.rows_zero_unified;
            continue;
        }
        ++with_rel;
        auto c = contributions(row);
        for (std::size_t i = 0; i < kMetricCount; ++i) {
            rel_sum[i] += *loo[i].rel_change;
            contrib_sum[i] += c[i];
        }
    }
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        AveragingRow r;
        r.metric = std::string(kMetricNames[i]);
        if (t.rows_used) r.mean_abs_change = abs_sum[i] / static_cast<double>(t.rows_used);
        if (with_rel) {
            r.mean_rel_change_pct = rel_sum[i] / static_cast<double>(with_rel) * 100.0;
            r.mean_contribution_pct = contrib_sum[i] / static_cast<double>(with_rel);
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::map<std::string, AveragingTable> averaging_by_model(std::span<const MetricVector> rows) {
    std::map<std::string, std::vector<MetricVector>> groups;
    for (const auto& r : rows) groups[r.model_id].push_back(r);
    std::map<std::string, AveragingTable> out;
    for (const auto& [model, group] : groups) out.emplace(model, averaging_table(group));
    return out;
}

CorrelationMatrix correlation_matrix(std::span<const MetricVector> rows) {
    CorrelationMatrix m;
    std::array<std::vector<double>, kMetricCount> cols;
    for (const auto& row : rows) {
        if (!row.complete()) {
            ++m.rows_dropped;
            continue;
        }
        ++m.rows_used;
        auto vals = row.require();
        for (std::size_t i = 0; i < kMetricCount; ++i) cols[i].push_back(vals[i]);
    }
    if (m.rows_used < 3) {
        throw Error(Errc::InsufficientRows,
                    "correlations need at least 3 complete rows, have " + std::to_string(m.rows_used));
    }
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        for (std::size_t j = i; j < kMetricCount; ++j) {
            CorrelationCell cell;
            cell.n = m.rows_used;
            try {
                auto res = pearson(cols[i], cols[j]);
                cell.r = i == j ? 1.0 : res.r;
                cell.p = i == j ? 0.0 : res.p;
            } catch (const Error& e) {
                if (e.code() != Errc::ConstantInput) throw;
                cell.note = "constant input";
            }
            m.cells[i][j] = cell;
            m.cells[j][i] = cell;
        }
    }
    return m;
}

namespace {

std::string fmt(double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string fmt_opt(const std::optional<double>& v, int precision, std::string_view missing) {
    return v ? fmt(*v, precision) : std::string(missing);
}

std::string fmt_p(const std::optional<double>& p, std::string_view missing) {
    if (!p) return std::string(missing);
    if (*p < 0.001) return "<.001";
    return fmt(*p, 3);
}

}  // namespace

std::string averaging_csv(const AveragingTable& t) {
    std::string out = "metric,mean_abs_change,mean_rel_change_pct,mean_contribution_pct\n";
    for (const auto& r : t.rows) {
        out += r.metric + "," + (t.rows_used ? fmt(r.mean_abs_change, 6) : std::string()) + "," + fmt_opt(r.mean_rel_change_pct, 4, "") + "," +
               fmt_opt(r.mean_contribution_pct, 4, "") + "\n";
    }
    return out;
}

std::string averaging_markdown(const AveragingTable& t) {
    std::string out = "| Metric | Mean abs. change | Mean rel. change (%) | Mean contribution (%) |\n"
                      "|---|---:|---:|---:|\n";
    for (const auto& r : t.rows) {
        out += "| " + r.metric + " | " + (t.rows_used ? fmt(r.mean_abs_change, 4) : std::string("n/a")) + " | " + fmt_opt(r.mean_rel_change_pct, 2, "n/a") +
               " | " + fmt_opt(r.mean_contribution_pct, 2, "n/a") + " |\n";
    }
    out += "\nRows used: " + std::to_string(t.rows_used) + ", dropped (incomplete): " +
           std::to_string(t.rows_dropped);
    if (t.rows_zero_unified) out += ", zero unified score: " + std::to_string(t.rows_zero_unified);
    out += "\n";
    return out;
}

std::string correlation_csv(const CorrelationMatrix& m) {
    std::string out = "metric_a,metric_b,r,p,n\n";
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        for (std::size_t j = 0; j < kMetricCount; ++j) {
            const auto& c = m.cells[i][j];
            out += std::string(kMetricNames[i]) + "," + std::string(kMetricNames[j]) + "," + fmt_opt(c.r, 6, "") +
                   "," + (c.p ? fmt(*c.p, 6) : std::string()) + "," + std::to_string(c.n) + "\n";
        }
    }
    return out;
}

std::string correlation_markdown(const CorrelationMatrix& m) {
    auto header = [] {
        std::string h = "| |";
        std::string rule = "|---|";
        for (auto name : kMetricNames) {
            h += " " + std::string(name) + " |";
            rule += "---:|";
        }
        return h + "\n" + rule + "\n";
    };
    std::string out = "Pearson r\n\n" + header();
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        out += "| " + std::string(kMetricNames[i]) + " |";
        for (std::size_t j = 0; j < kMetricCount; ++j) out += " " + fmt_opt(m.cells[i][j].r, 2, "n/a") + " |";
        out += "\n";
    }
    out += "\np-values\n\n" + header();
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        out += "| " + std::string(kMetricNames[i]) + " |";
        for (std::size_t j = 0; j < kMetricCount; ++j) out += " " + fmt_p(m.cells[i][j].p, "n/a") + " |";
        out += "\n";
    }
    out += "\nn = " + std::to_string(m.rows_used) + " complete rows, " + std::to_string(m.rows_dropped) +
           " dropped\n";
    return out;
}

// ---------------------------------------------------------------------------
// Input
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else {
            cells.back() += c;
        }
    }
    if (quoted) throw Error(Errc::Parse, "unterminated quote in CSV line");
    return cells;
}

std::optional<double> parse_cell(std::string_view cell) {
    auto t = text::trim(cell);
    auto lower = text::to_lower(t);
    if (t.empty() || lower == "na" || lower == "n/a" || lower == "null" || lower == "nan") return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(std::string(t), &used);
    } catch (const std::exception&) {
        throw Error(Errc::Parse, "not a number: '" + std::string(t) + "'");
    }
    if (used != t.size()) throw Error(Errc::Parse, "not a number: '" + std::string(t) + "'");
    return v;
}

MetricVector vector_from_json(const json& j) {
    MetricVector v;
    const json& scores = j.contains("scores") ? j.at("scores") : j;
    const json& meta = j.contains("run") ? j.at("run") : j;
    if (meta.contains("model_id") && meta["model_id"].is_string()) v.model_id = meta["model_id"];
    if (meta.contains("paper_id") && meta["paper_id"].is_string()) v.paper_id = meta["paper_id"];
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        auto it = scores.find(std::string(kMetricNames[i]));
        if (it == scores.end() || it->is_null()) continue;
        if (!it->is_number()) throw Error(Errc::Parse, "metric '" + std::string(kMetricNames[i]) + "' is not a number");
        v.values[i] = it->get<double>();
    }
    return v;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<MetricVector> parse_metric_csv(std::string_view csv) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
        auto end = csv.find('\n', start);
        if (end == std::string_view::npos) end = csv.size();
        auto line = csv.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!text::trim(line).empty()) lines.emplace_back(line);
        start = end + 1;
    }
    if (lines.empty()) throw Error(Errc::Parse, "CSV has no header");
    auto header = split_csv_line(lines[0]);
    std::array<std::optional<std::size_t>, kMetricCount> col;
    std::optional<std::size_t> model_col, paper_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto name = text::to_lower(text::trim(header[c]));
        if (name == "model_id" || name == "model") model_col = c;
        else if (name == "paper_id" || name == "paper") paper_col = c;
        else {
            for (std::size_t i = 0; i < kMetricCount; ++i) {
                if (kMetricNames[i] == name) col[i] = c;
            }
        }
    }
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (!col[i]) throw Error(Errc::Parse, "CSV header lacks column '" + std::string(kMetricNames[i]) + "'");
    }
    std::vector<MetricVector> out;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto cells = split_csv_line(lines[l]);
        if (cells.size() != header.size()) {
            throw Error(Errc::Parse, "CSV line " + std::to_string(l + 1) + " has " + std::to_string(cells.size()) +
                                         " cells, header has " + std::to_string(header.size()));
        }
        MetricVector v;
        if (model_col) v.model_id = std::string(text::trim(cells[*model_col]));
        if (paper_col) v.paper_id = std::string(text::trim(cells[*paper_col]));
        for (std::size_t i = 0; i < kMetricCount; ++i) v.values[i] = parse_cell(cells[*col[i]]);
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<MetricVector> parse_metric_jsonl(std::string_view jsonl) {
    std::vector<MetricVector> out;
    std::size_t line_no = 0;
    for (const auto& line : text::nonempty_lines(jsonl)) {
        ++line_no;
        try {
            out.push_back(vector_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(Errc::Parse, "JSONL line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<MetricVector> load_metric_rows(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<MetricVector> out;
        for (const auto& f : files) {
            try {
                out.push_back(vector_from_json(json::parse(slurp(f))));
            } catch (const json::exception& e) {
                throw Error(Errc::Parse, f.string() + ": " + e.what());
            }
        }
        return out;
    }
    auto body = slurp(path);
    if (path.extension() == ".csv") return parse_metric_csv(body);
    if (path.extension() == ".json") {
        try {
            auto j = json::parse(body);
            if (j.is_array()) {
                std::vector<MetricVector> out;
                for (const auto& e : j) out.push_back(vector_from_json(e));
                return out;
            }
            return {vector_from_json(j)};
        } catch (const json::exception& e) {
            throw Error(Errc::Parse, path.string() + ": " + e.what());
        }
    }
    return parse_metric_jsonl(body);
}

}  // namespace revieweval::analytics
