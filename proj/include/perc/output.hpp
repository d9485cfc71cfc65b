#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "perc/config.hpp"
#include "perc/exploration.hpp"
#include "perc/lattice.hpp"
#include "perc/sampling.hpp"

namespace perc {

using Cell = std::variant<std::string, long long, std::uint64_t, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match the header");
    rows.push_back(std::move(row));
  }
};

inline std::string format_17g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string cell_text(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (auto u = std::get_if<std::uint64_t>(&c)) return std::to_string(*u);
  return format_17g(std::get<double>(c));
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto i = std::get_if<long long>(&c)) return *i;
  if (auto u = std::get_if<std::uint64_t>(&c)) return *u;
  double d = std::get<double>(c);
  if (!std::isfinite(d)) return nullptr;
  return d;
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto& [k, v] : cfg.resolved()) j[k] = v;
  return j;
}

inline std::string provenance_text(const ExperimentConfig& cfg) {
  if (!cfg.provenance.from_file) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.provenance.hash));
  return cfg.provenance.path + " fnv1a=" + buf;
}

inline void write_csv(std::ostream& out, const ExperimentConfig& cfg, const Table& t) {
  out << "# perc " << cfg.command() << "\n";
  if (auto p = provenance_text(cfg); !p.empty()) out << "# source: " << p << "\n";
  for (auto& [k, v] : cfg.resolved()) out << "# " << k << " = " << v << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string s = cell_text(row[i]);
      if (s.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        s = q + "\"";
      }
      out << (i ? "," : "") << s;
    }
    out << "\n";
  }
}

inline void write_jsonl(std::ostream& out, const ExperimentConfig& cfg, const Table& t) {
  nlohmann::ordered_json meta;
  meta["meta"]["command"] = cfg.command();
  if (auto p = provenance_text(cfg); !p.empty()) meta["meta"]["source"] = p;
  meta["meta"]["config"] = config_json(cfg);
  out << meta.dump() << "\n";
  for (const auto& row : t.rows) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < row.size(); ++i) j[t.columns[i]] = cell_json(row[i]);
    out << j.dump() << "\n";
  }
}

inline void write_table(std::ostream& out, const ExperimentConfig& cfg, const Table& t) {
  if (cfg.get_string("format") == "jsonl") write_jsonl(out, cfg, t);
  else write_csv(out, cfg, t);
}

// SVG.

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

struct Bounds {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  void add(cplx z, double pad = 0) {
    x0 = std::min(x0, z.real() - pad);
    x1 = std::max(x1, z.real() + pad);
    y0 = std::min(y0, -z.imag() - pad);
    y1 = std::max(y1, -z.imag() + pad);
  }
  bool empty() const { return x0 > x1; }
};

inline std::string svg_document(const Bounds& bounds, const std::string& metadata, const std::string& body) {
  Bounds b = bounds;
  if (b.empty()) b = {-1, -1, 1, 1};
  const double m = std::max(0.05 * std::max(b.x1 - b.x0, b.y1 - b.y0), 1e-3);
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" << num(b.x0 - m) << " "
      << num(b.y0 - m) << " " << num(b.x1 - b.x0 + 2 * m) << " " << num(b.y1 - b.y0 + 2 * m) << "\">\n"
      << "<metadata>" << xml_escape(metadata) << "</metadata>\n"
      << body << "</svg>\n";
  return out.str();
}

inline std::string cell_polygon(Site s, Color c) {
  HexCell h = hex_cell(s);
  std::string pts;
  for (std::size_t k = 0; k < h.vertices.size(); ++k)
    pts += (k ? " " : "") + num(h.vertices[k].real()) + "," + num(-h.vertices[k].imag());
  return "<polygon points=\"" + pts + "\" fill=\"" + (c == Color::Black ? "black" : "white") +
         "\" stroke=\"#808080\" stroke-width=\"0.05\"/>\n";
}

inline std::string polyline(const std::vector<cplx>& pts, const char* colour, double width) {
  if (pts.empty()) return "";
  std::string s;
  for (std::size_t k = 0; k < pts.size(); ++k) s += (k ? " " : "") + num(pts[k].real()) + "," + num(-pts[k].imag());
  return "<polyline points=\"" + s + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"" + num(width) +
         "\"/>\n";
}

inline std::string metadata_text(const ExperimentConfig* cfg) {
  if (!cfg) return "";
  std::string out;
  for (auto& [k, v] : cfg->resolved()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace detail

/// One hexagon per region cell.
inline std::string render_svg(const Configuration& c, const ExperimentConfig* cfg = nullptr) {
  const auto& rr = c.region();
  detail::Bounds b;
  std::string body;
  for (std::size_t i = 0; i < rr.size(); ++i) {
    Site s = rr.sites[i];
    b.add(to_plane(s), 0.6);
    body += detail::cell_polygon(s, c.color_at(static_cast<int>(i)));
  }
  return detail::svg_document(b, detail::metadata_text(cfg), body);
}

/// Polyline through the path vertices, optionally over the configuration.
inline std::string render_svg(const ExplorationPath& p, const Configuration* background = nullptr,
                              const ExperimentConfig* cfg = nullptr) {
  detail::Bounds b;
  std::string body;
  if (background) {
    const auto& rr = background->region();
    for (std::size_t i = 0; i < rr.size(); ++i) {
      b.add(to_plane(rr.sites[i]), 0.6);
      body += detail::cell_polygon(rr.sites[i], background->color_at(static_cast<int>(i)));
    }
  }
  auto pts = p.points();
  for (auto z : pts) b.add(z);
  body += detail::polyline(pts, "red", 0.15);
  return detail::svg_document(b, detail::metadata_text(cfg), body);
}

/// Polyline through a continuum trace.
inline std::string render_svg(const std::vector<cplx>& trace, const ExperimentConfig* cfg = nullptr) {
  detail::Bounds b;
  for (auto z : trace) b.add(z);
  double w = b.empty() ? 0.01 : std::max(b.x1 - b.x0, b.y1 - b.y0) / 400;
  return detail::svg_document(b, detail::metadata_text(cfg), detail::polyline(trace, "red", std::max(w, 1e-4)));
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace perc
