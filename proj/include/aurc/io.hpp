#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aurc/estimators.hpp"
#include "aurc/harness.hpp"
#include "aurc/losses.hpp"
#include "aurc/stat_props.hpp"

namespace aurc {

enum class DatasetFormat { jsonl, csv };

enum class ReportFormat { csv, json };

struct DatasetFile {
    std::vector<LogitsRecord> records;
    std::size_t k = 0; // class count, constant across the file
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line,
                                    const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline double parse_double(std::string_view token, const std::string& path,
                           std::size_t line, const char* field) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        parse_fail(path, line, std::string("bad ") + field + " value '" +
                                   std::string(token) + "'");
    return value;
}

inline long parse_int(std::string_view token, const std::string& path, std::size_t line,
                      const char* field) {
    long value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        parse_fail(path, line, std::string("bad ") + field + " value '" +
                                   std::string(token) + "'");
    return value;
}

inline void check_record(const LogitsRecord& rec, std::size_t expected_k,
                         const std::string& path, std::size_t line) {
    if (rec.logits.size() != expected_k)
        parse_fail(path, line,
                   "expected " + std::to_string(expected_k) + " logits, got " +
                       std::to_string(rec.logits.size()));
    if (rec.label < 0 || static_cast<std::size_t>(rec.label) >= expected_k)
        parse_fail(path, line, "label " + std::to_string(rec.label) + " out of 0.." +
                                   std::to_string(expected_k - 1));
    for (double z : rec.logits)
        if (!std::isfinite(z)) parse_fail(path, line, "non-finite logit");
}

} // namespace detail

// Streaming visitor over a dataset; one record in memory at a time.
// JSONL lines look like {"logits":[...],"label":k}; CSV carries the
// header label,logit_0,...,logit_{k-1}.
inline void for_each_record(std::istream& in, DatasetFormat format, const std::string& path,
                            const std::function<void(const LogitsRecord&, std::size_t)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t k = 0;
    if (format == DatasetFormat::jsonl) {
        while (std::getline(in, line)) {
            ++line_no;
            detail::strip_cr(line);
            if (line.empty()) continue;
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                detail::parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
            }
            if (!parsed.is_object() || !parsed.contains("logits") ||
                !parsed.contains("label"))
                detail::parse_fail(path, line_no, "expected {\"logits\":[...],\"label\":int}");
            if (!parsed["logits"].is_array() || !parsed["label"].is_number_integer())
                detail::parse_fail(path, line_no, "wrong field types for logits/label");
            LogitsRecord rec;
            rec.label = parsed["label"].get<int>();
            for (const auto& v : parsed["logits"]) {
                if (!v.is_number())
                    detail::parse_fail(path, line_no, "logits must be numbers");
                rec.logits.push_back(v.get<double>());
            }
            if (rec.logits.size() < 2)
                detail::parse_fail(path, line_no, "needs at least 2 logits");
            if (k == 0) k = rec.logits.size();
            detail::check_record(rec, k, path, line_no);
            fn(rec, line_no);
        }
        return;
    }
    if (!std::getline(in, line)) detail::parse_fail(path, 1, "missing CSV header");
    ++line_no;
    detail::strip_cr(line);
    {
        std::string expected = "label";
        std::size_t cols = 0;
        std::string_view view(line);
        std::size_t start = 0;
        bool header_ok = true;
        while (start <= view.size()) {
            const std::size_t comma = view.find(',', start);
            const std::string_view cell =
                view.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - start);
            if (cols == 0) {
                header_ok = cell == "label";
            } else {
                header_ok = cell == ("logit_" + std::to_string(cols - 1));
            }
            if (!header_ok)
                detail::parse_fail(path, 1,
                                   "bad CSV header; expected label,logit_0,...,logit_{k-1}");
            ++cols;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cols < 3) detail::parse_fail(path, 1, "CSV header needs at least 2 logits");
        k = cols - 1;
    }
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        LogitsRecord rec;
        rec.logits.reserve(k);
        std::string_view view(line);
        std::size_t start = 0;
        std::size_t col = 0;
        while (start <= view.size()) {
            const std::size_t comma = view.find(',', start);
            const std::string_view cell =
                view.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - start);
            if (col == 0) {
                rec.label = static_cast<int>(
                    detail::parse_int(cell, path, line_no, "label"));
            } else {
                rec.logits.push_back(detail::parse_double(cell, path, line_no, "logit"));
            }
            ++col;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (col != k + 1)
            detail::parse_fail(path, line_no,
                               "expected " + std::to_string(k + 1) + " columns, got " +
                                   std::to_string(col));
        detail::check_record(rec, k, path, line_no);
        fn(rec, line_no);
    }
}

inline DatasetFile load_dataset(const std::string& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    DatasetFile file;
    for_each_record(in, format, path, [&](const LogitsRecord& rec, std::size_t) {
        if (file.k == 0) file.k = rec.logits.size();
        file.records.push_back(rec);
    });
    if (file.records.empty())
        throw std::runtime_error(path + ": dataset is empty");
    return file;
}

// Reports carry their seed and a hash of the full flag string, so a
// result file names the run that produced it.
struct Provenance {
    std::uint64_t seed = 0;
    std::string config;
};

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

// 12 significant digits everywhere a report writes a real.
inline std::string format_real(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

// 17 digits: datasets must survive a write/load round trip bit-exactly.
inline std::string format_real_exact(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline void write_dataset(std::ostream& out, std::span<const LogitsRecord> records,
                          DatasetFormat format) {
    if (records.empty()) throw std::invalid_argument("write_dataset: no records");
    const std::size_t k = records[0].logits.size();
    if (format == DatasetFormat::csv) {
        out << "label";
        for (std::size_t i = 0; i < k; ++i) out << ",logit_" << i;
        out << '\n';
        for (const auto& rec : records) {
            out << rec.label;
            for (double z : rec.logits) out << ',' << format_real_exact(z);
            out << '\n';
        }
        return;
    }
    for (const auto& rec : records) {
        out << "{\"logits\":[";
        for (std::size_t i = 0; i < k; ++i) {
            if (i) out << ',';
            out << format_real_exact(rec.logits[i]);
        }
        out << "],\"label\":" << rec.label << "}\n";
    }
}

namespace detail {

inline std::string json_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size() + 2);
    for (char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

inline void write_provenance_json(std::ostream& out, const Provenance& prov) {
    out << "\"provenance\":{\"seed\":" << prov.seed << ",\"config\":\""
        << json_escape(prov.config) << "\",\"config_hash\":\"" << std::hex
        << fnv1a64(prov.config) << std::dec << "\"}";
}

} // namespace detail

inline void write_estimator_reports(std::ostream& out,
                                    std::span<const EstimatorReport> reports,
                                    const Provenance& prov, ReportFormat format) {
    if (format == ReportFormat::csv) {
        out << "estimator,value,n,loss,csf,tie_policy,seed\n";
        for (const auto& rep : reports) {
            out << to_string(rep.estimator) << ',' << format_real(rep.value) << ','
                << rep.n << ',' << (rep.loss_kind ? to_string(*rep.loss_kind) : "") << ','
                << (rep.csf_kind ? to_string(*rep.csf_kind) : "") << ','
                << to_string(rep.tie_policy) << ','
                << (rep.seed ? std::to_string(*rep.seed) : "") << '\n';
        }
        return;
    }
    out << "{";
    detail::write_provenance_json(out, prov);
    out << ",\"reports\":[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        if (i) out << ',';
        out << "{\"estimator\":\"" << to_string(rep.estimator)
            << "\",\"value\":" << format_real(rep.value) << ",\"n\":" << rep.n
            << ",\"loss\":\"" << (rep.loss_kind ? to_string(*rep.loss_kind) : "")
            << "\",\"csf\":\"" << (rep.csf_kind ? to_string(*rep.csf_kind) : "")
            << "\",\"tie_policy\":\"" << to_string(rep.tie_policy) << "\"";
        if (rep.seed) out << ",\"seed\":" << *rep.seed;
        out << "}";
    }
    out << "]}\n";
}

inline void write_convergence_table(std::ostream& out, const ConvergenceTable& table,
                                    const Provenance& prov, ReportFormat format) {
    if (format == ReportFormat::csv) {
        out << "batch_size,estimator,mean,std,mae,mse,n_batches\n";
        for (const auto& row : table.rows) {
            out << row.batch_size << ',' << to_string(row.estimator) << ','
                << format_real(row.mean) << ',' << format_real(row.stddev) << ','
                << format_real(row.mae) << ',' << format_real(row.mse) << ','
                << row.n_batches << '\n';
        }
        return;
    }
    out << "{";
    detail::write_provenance_json(out, prov);
    out << ",\"population_value\":" << format_real(table.population_value);
    out << ",\"rate_slopes\":{";
    for (std::size_t i = 0; i < table.rate_slopes.size(); ++i) {
        if (i) out << ',';
        out << "\"" << to_string(table.rate_slopes[i].first)
            << "\":" << format_real(table.rate_slopes[i].second);
    }
    out << "},\"rows\":[";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (i) out << ',';
        out << "{\"batch_size\":" << row.batch_size << ",\"estimator\":\""
            << to_string(row.estimator) << "\",\"mean\":" << format_real(row.mean)
            << ",\"std\":" << format_real(row.stddev)
            << ",\"mae\":" << format_real(row.mae) << ",\"mse\":" << format_real(row.mse)
            << ",\"n_batches\":" << row.n_batches << "}";
    }
    out << "]}\n";
}

inline void write_bias_mse_curves(std::ostream& out, std::span<const BiasMseCurve> curves,
                                  const Provenance& prov, ReportFormat format) {
    bool any_mc = false;
    for (const auto& curve : curves)
        for (const auto& pt : curve.points)
            if (pt.mc_estimate) any_mc = true;
    if (format == ReportFormat::csv) {
        out << "quantity,n,beta_or_rank,closed_form";
        if (any_mc) out << ",mc_estimate,mc_stderr,mc_reps";
        out << '\n';
        for (const auto& curve : curves) {
            for (const auto& pt : curve.points) {
                out << to_string(curve.quantity) << ',' << curve.n << ','
                    << format_real(pt.x) << ',' << format_real(pt.closed_form);
                if (any_mc) {
                    out << ',' << (pt.mc_estimate ? format_real(*pt.mc_estimate) : "")
                        << ',' << (pt.mc_stderr ? format_real(*pt.mc_stderr) : "") << ','
                        << (pt.mc_reps ? std::to_string(*pt.mc_reps) : "");
                }
                out << '\n';
            }
        }
        return;
    }
    out << "{";
    detail::write_provenance_json(out, prov);
    out << ",\"curves\":[";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& curve = curves[c];
        if (c) out << ',';
        out << "{\"quantity\":\"" << to_string(curve.quantity) << "\",\"n\":" << curve.n
            << ",\"points\":[";
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& pt = curve.points[i];
            if (i) out << ',';
            out << "{\"x\":" << format_real(pt.x)
                << ",\"closed_form\":" << format_real(pt.closed_form);
            if (pt.mc_estimate) {
                out << ",\"mc_estimate\":" << format_real(*pt.mc_estimate)
                    << ",\"mc_stderr\":" << format_real(*pt.mc_stderr)
                    << ",\"mc_reps\":" << *pt.mc_reps;
            }
            out << "}";
        }
        out << "]}";
    }
    out << "]}\n";
}

// Path wrappers; IO failures surface with the path attached.
template <typename WriteFn>
inline void write_file(const std::string& path, WriteFn&& fn) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    fn(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace aurc
