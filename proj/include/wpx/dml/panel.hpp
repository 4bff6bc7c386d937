#pragma once

// Flat event panel used by the DV-WPX estimator, plus its CSV form:
//   event_id,customer_id,query_group,zip,drev,x_<name>...,m_<name>...,h_<name>...

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "wpx/error.hpp"

namespace wpx::dml {

struct PanelSchema {
    std::vector<std::string> x_names;  // surrogates X
    std::vector<std::string> m_names;  // short-term metrics M
    std::vector<std::string> h_names;  // customer history H

    std::size_t s() const { return x_names.size(); }
    std::size_t j() const { return m_names.size(); }
    std::size_t k() const { return h_names.size(); }

    bool operator==(const PanelSchema&) const = default;
};

struct PanelRecord {
    std::uint64_t event_id = 0;
    std::string customer_id;
    std::string query_group;  // keyword x index alias x ranking function
    std::string zip;
    double target_drev = 0.0;
    std::vector<double> surrogates_x;
    std::vector<double> short_term_m;
    std::vector<double> history_h;

    bool operator==(const PanelRecord&) const = default;
};

struct PanelDataset {
    PanelSchema schema;
    std::vector<PanelRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    /// Throws DomainError on ragged vectors, non-finite values or empty keys.
    void validate() const {
        for (const auto& r : records) {
            if (r.surrogates_x.size() != schema.s() || r.short_term_m.size() != schema.j() ||
                r.history_h.size() != schema.k()) {
                throw DomainError("panel: event " + std::to_string(r.event_id) + " does not match schema");
            }
            if (r.query_group.empty() || r.zip.empty()) {
                throw DomainError("panel: event " + std::to_string(r.event_id) + " has an empty group key");
            }
            auto finite = [](const std::vector<double>& v) {
                for (double d : v)
                    if (!std::isfinite(d)) return false;
                return true;
            };
            if (!std::isfinite(r.target_drev) || !finite(r.surrogates_x) || !finite(r.short_term_m) ||
                !finite(r.history_h)) {
                throw DomainError("panel: event " + std::to_string(r.event_id) + " has a non-finite value");
            }
        }
    }

    bool operator==(const PanelDataset&) const = default;
};

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    out.append(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DomainError("panel csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace detail

inline void write_panel_csv(std::ostream& os, const PanelDataset& data) {
    std::string line = "event_id,customer_id,query_group,zip,drev";
    for (const auto& n : data.schema.x_names) line += ",x_" + n;
    for (const auto& n : data.schema.m_names) line += ",m_" + n;
    for (const auto& n : data.schema.h_names) line += ",h_" + n;
    os << line << '\n';
    for (const auto& r : data.records) {
        line.clear();
        line += std::to_string(r.event_id);
        line += ',';
        line += r.customer_id;
        line += ',';
        line += r.query_group;
        line += ',';
        line += r.zip;
        line += ',';
        detail::append_double(line, r.target_drev);
        for (const auto* vec : {&r.surrogates_x, &r.short_term_m, &r.history_h}) {
            for (double v : *vec) {
                line += ',';
                detail::append_double(line, v);
            }
        }
        os << line << '\n';
    }
}

inline PanelDataset read_panel_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("panel csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv(line);
    const std::vector<std::string_view> fixed{"event_id", "customer_id", "query_group", "zip", "drev"};
    if (header.size() < fixed.size()) throw DomainError("panel csv: header too short");
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (header[i] != fixed[i]) throw DomainError("panel csv: expected column '" + std::string(fixed[i]) + "'");
    }

    PanelDataset data;
    // Columns are discovered by prefix and must appear grouped as x_, m_, h_.
    int stage = 0;
    for (std::size_t i = fixed.size(); i < header.size(); ++i) {
        std::string_view col = header[i];
        int col_stage = col.starts_with("x_") ? 0 : col.starts_with("m_") ? 1 : col.starts_with("h_") ? 2 : -1;
        if (col_stage < 0) throw DomainError("panel csv: unknown column '" + std::string(col) + "'");
        if (col_stage < stage) throw DomainError("panel csv: columns must be ordered x_, m_, h_");
        stage = col_stage;
        std::string name(col.substr(2));
        (col_stage == 0 ? data.schema.x_names : col_stage == 1 ? data.schema.m_names : data.schema.h_names)
            .push_back(std::move(name));
    }

    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size()) {
            throw DomainError("panel csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells");
        }
        PanelRecord r;
        auto id_res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.event_id);
        if (id_res.ec != std::errc{}) throw DomainError("panel csv line " + std::to_string(line_no) + ": bad event_id");
        r.customer_id = std::string(cells[1]);
        r.query_group = std::string(cells[2]);
        r.zip = std::string(cells[3]);
        r.target_drev = detail::parse_double(cells[4], line_no);
        std::size_t c = 5;
        for (std::size_t i = 0; i < data.schema.s(); ++i) r.surrogates_x.push_back(detail::parse_double(cells[c++], line_no));
        for (std::size_t i = 0; i < data.schema.j(); ++i) r.short_term_m.push_back(detail::parse_double(cells[c++], line_no));
        for (std::size_t i = 0; i < data.schema.k(); ++i) r.history_h.push_back(detail::parse_double(cells[c++], line_no));
        data.records.push_back(std::move(r));
    }
    return data;
}

inline void save_panel_csv(const std::string& path, const PanelDataset& data) {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot open " + path + " for writing");
    write_panel_csv(os, data);
}

inline PanelDataset load_panel_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open " + path);
    return read_panel_csv(is);
}

}  // namespace wpx::dml
