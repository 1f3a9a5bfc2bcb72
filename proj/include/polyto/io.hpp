#pragma once
//
// File formats: polygons.json, density.csv, displacement.csv, design.svg.
//

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyto/error.hpp"
#include "polyto/fea.hpp"
#include "polyto/geometry.hpp"

namespace polyto {

namespace fs = std::filesystem;

/// printf-style formatting of a single double.
inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Creates `dir` and checks that a file can be written inside it.
inline void ensure_writable_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const fs::path probe = dir / ".polyto_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

// ---------------------------------------------------------------------------
// polygons.json
// ---------------------------------------------------------------------------

struct PolygonFile {
  PolygonSet polygons;
  double lx = 0.0;
  double ly = 0.0;
};

inline nlohmann::json polygons_to_json(const PolygonSet& p, double lx, double ly) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < p.K(); ++i) {
    auto off = p.offsets(i);
    arr.push_back({{"cx", p.cx(i)},
                   {"cy", p.cy(i)},
                   {"alpha", p.alpha(i)},
                   {"d", std::vector<double>(off.begin(), off.end())}});
  }
  return {{"K", p.K()}, {"S", p.S()}, {"lx", lx}, {"ly", ly}, {"polygons", arr}};
}

inline PolygonFile polygons_from_json(const nlohmann::json& j) {
  try {
    PolygonFile f;
    int K = j.at("K").get<int>(), S = j.at("S").get<int>();
    f.lx = j.at("lx").get<double>();
    f.ly = j.at("ly").get<double>();
    const auto& arr = j.at("polygons");
    if (!arr.is_array() || static_cast<int>(arr.size()) != K)
      throw ConfigError("polygons.json: expected " + std::to_string(K) + " polygon records");
    f.polygons = PolygonSet(K, S);
    for (int i = 0; i < K; ++i) {
      const auto& r = arr[i];
      f.polygons.cx(i) = r.at("cx").get<double>();
      f.polygons.cy(i) = r.at("cy").get<double>();
      f.polygons.alpha(i) = r.at("alpha").get<double>();
      auto d = r.at("d").get<std::vector<double>>();
      if (static_cast<int>(d.size()) != S)
        throw ConfigError("polygons.json: polygon " + std::to_string(i) + " needs " +
                          std::to_string(S) + " offsets");
      std::copy(d.begin(), d.end(), f.polygons.offsets(i).begin());
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("polygons.json: ") + e.what());
  }
}

inline void write_polygons_json(const fs::path& path, const PolygonSet& p, double lx, double ly) {
  write_text(path, polygons_to_json(p, lx, ly).dump(2) + "\n");
}

inline PolygonFile read_polygons_json(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  return polygons_from_json(j);
}

// ---------------------------------------------------------------------------
// density.csv / displacement.csv
// ---------------------------------------------------------------------------

/// First line "# nelx,nely,lx,ly" with the values, then nely rows from the
/// top of the domain down, nelx densities each, 9 significant digits.
inline std::string density_csv(const MeshProblem& mp, std::span<const double> rho) {
  std::string s = "# " + std::to_string(mp.nelx) + "," + std::to_string(mp.nely) + "," +
                  format_double(mp.lx) + "," + format_double(mp.ly) + "\n";
  for (int ey = mp.nely - 1; ey >= 0; --ey) {
    for (int ex = 0; ex < mp.nelx; ++ex) {
      if (ex > 0) s += ',';
      s += format_double(rho[static_cast<std::size_t>(ey) * mp.nelx + ex], "%.9g");
    }
    s += '\n';
  }
  return s;
}

struct DensityGrid {
  int nelx = 0, nely = 0;
  double lx = 0.0, ly = 0.0;
  std::vector<double> rho;  ///< element order ey * nelx + ex (bottom row first)
};

inline DensityGrid parse_density_csv(const std::string& text) {
  DensityGrid g;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw ConfigError("density.csv: missing '# nelx,nely,lx,ly' header");
  if (std::sscanf(line.c_str() + 2, "%d,%d,%lf,%lf", &g.nelx, &g.nely, &g.lx, &g.ly) != 4 ||
      g.nelx < 1 || g.nely < 1)
    throw ConfigError("density.csv: malformed header '" + line + "'");
  g.rho.assign(static_cast<std::size_t>(g.nelx) * g.nely, 0.0);
  for (int ey = g.nely - 1; ey >= 0; --ey) {
    if (!std::getline(in, line)) throw ConfigError("density.csv: too few rows");
    std::istringstream row(line);
    std::string cell;
    for (int ex = 0; ex < g.nelx; ++ex) {
      if (!std::getline(row, cell, ','))
        throw ConfigError("density.csv: too few columns in row " + std::to_string(g.nely - ey));
      g.rho[static_cast<std::size_t>(ey) * g.nelx + ex] = std::stod(cell);
    }
  }
  return g;
}

inline std::string displacement_csv(std::span<const double> u) {
  std::string s = "node,ux,uy\n";
  for (std::size_t n = 0; 2 * n + 1 < u.size(); ++n)
    s += std::to_string(n) + "," + format_double(u[2 * n]) + "," + format_double(u[2 * n + 1]) +
         "\n";
  return s;
}

// ---------------------------------------------------------------------------
// design.svg
// ---------------------------------------------------------------------------

/// Domain rectangle with the polygons clipped to it, optionally over a
/// grayscale density underlay (black = solid).
inline std::string design_svg(const PolygonSet& p, double lx, double ly,
                              const DensityGrid* underlay = nullptr, double width_px = 800.0) {
  const double scale = width_px / lx;
  const double W = lx * scale, H = ly * scale;
  auto X = [&](double x) { return format_double(x * scale, "%.4f"); };
  auto Y = [&](double y) { return format_double((ly - y) * scale, "%.4f"); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(W, "%.0f") +
       "\" height=\"" + format_double(H, "%.0f") + "\" viewBox=\"0 0 " + format_double(W, "%.4f") +
       " " + format_double(H, "%.4f") + "\">\n";
  s += "<defs><clipPath id=\"domain\"><rect x=\"0\" y=\"0\" width=\"" + format_double(W, "%.4f") +
       "\" height=\"" + format_double(H, "%.4f") + "\"/></clipPath></defs>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + format_double(W, "%.4f") + "\" height=\"" +
       format_double(H, "%.4f") + "\" fill=\"white\"/>\n";
  if (underlay && !underlay->rho.empty()) {
    const double ex_w = lx / underlay->nelx, ey_h = ly / underlay->nely;
    s += "<g shape-rendering=\"crispEdges\">\n";
    for (int ey = 0; ey < underlay->nely; ++ey)
      for (int ex = 0; ex < underlay->nelx; ++ex) {
        double r = std::clamp(underlay->rho[static_cast<std::size_t>(ey) * underlay->nelx + ex],
                              0.0, 1.0);
        int level = static_cast<int>(std::lround(255.0 * (1.0 - r)));
        if (level >= 255) continue;
        s += "<rect x=\"" + X(ex * ex_w) + "\" y=\"" + Y((ey + 1) * ey_h) + "\" width=\"" +
             format_double(ex_w * scale, "%.4f") + "\" height=\"" +
             format_double(ey_h * scale, "%.4f") + "\" fill=\"rgb(" + std::to_string(level) + "," +
             std::to_string(level) + "," + std::to_string(level) + ")\"/>\n";
      }
    s += "</g>\n";
  }
  s += "<g clip-path=\"url(#domain)\" fill=\"steelblue\" fill-opacity=\"0.55\" stroke=\"navy\" "
       "stroke-width=\"1\">\n";
  for (int i = 0; i < p.K(); ++i) {
    auto v = polygon_vertices(i, p);
    if (v.size() < 3) continue;
    s += "<polygon points=\"";
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) s += ' ';
      s += X(v[k].x) + "," + Y(v[k].y);
    }
    s += "\"/>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + format_double(W, "%.4f") + "\" height=\"" +
       format_double(H, "%.4f") + "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace polyto
