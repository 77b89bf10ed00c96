#include "mace/extxyz.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mace/errors.hpp"

namespace mace {
namespace {

struct Column {
  std::string name;
  char type = 'S';
  int width = 1;
};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  // from_chars for double is available in libstdc++ 11
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

double require_double(std::string_view token, std::size_t line, const std::string& what) {
  double v = 0.0;
  if (!parse_double(token, v)) throw ParseError("non-numeric " + what + " '" + std::string(token) + "'", line);
  return v;
}

// key=value pairs with optional double quotes; bare keys map to "T".
std::vector<std::pair<std::string, std::string>> parse_comment(std::string_view line, std::size_t lineno) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  };
  while (true) {
    skip_ws();
    if (i >= line.size()) break;
    std::size_t k0 = i;
    while (i < line.size() && line[i] != '=' && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::string key(line.substr(k0, i - k0));
    skip_ws();
    if (i >= line.size() || line[i] != '=') {
      kv.emplace_back(std::move(key), "T");
      continue;
    }
    ++i;
    skip_ws();
    std::string value;
    if (i < line.size() && (line[i] == '"' || line[i] == '\'')) {
      const char q = line[i++];
      std::size_t close = line.find(q, i);
      if (close == std::string_view::npos) throw ParseError("unterminated quote for key '" + key + "'", lineno);
      value = std::string(line.substr(i, close - i));
      i = close + 1;
    } else {
      std::size_t v0 = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      value = std::string(line.substr(v0, i - v0));
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

std::vector<Column> parse_properties(const std::string& spec, std::size_t lineno) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty() || parts.size() % 3 != 0) throw ParseError("malformed Properties declaration '" + spec + "'", lineno);
  std::vector<Column> cols;
  for (std::size_t i = 0; i < parts.size(); i += 3) {
    Column c;
    c.name = parts[i];
    if (parts[i + 1].size() != 1 || std::string("SRIL").find(parts[i + 1][0]) == std::string::npos) {
      throw ParseError("malformed Properties type '" + parts[i + 1] + "' for column " + c.name, lineno);
    }
    c.type = parts[i + 1][0];
    int w = 0;
    auto [ptr, ec] = std::from_chars(parts[i + 2].data(), parts[i + 2].data() + parts[i + 2].size(), w);
    if (ec != std::errc() || ptr != parts[i + 2].data() + parts[i + 2].size() || w < 1) {
      throw ParseError("malformed Properties width '" + parts[i + 2] + "' for column " + c.name, lineno);
    }
    c.width = w;
    cols.push_back(std::move(c));
  }
  return cols;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool needs_quotes(const std::string& v) {
  return v.empty() || v.find_first_of(" \t\"=") != std::string::npos;
}

}  // namespace

std::vector<Configuration> parse_extxyz(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<Configuration> configs;
  std::size_t li = 0;
  while (li < lines.size()) {
    if (trim(lines[li]).empty()) {
      ++li;
      continue;
    }
    const std::size_t header_line = li + 1;
    const std::string frame = "frame " + std::to_string(configs.size()) + " (line " + std::to_string(header_line) + ")";
    std::string_view count_tok = trim(lines[li]);
    std::size_t natoms = 0;
    auto [ptr, ec] = std::from_chars(count_tok.data(), count_tok.data() + count_tok.size(), natoms);
    if (ec != std::errc() || ptr != count_tok.data() + count_tok.size()) {
      throw ParseError(frame + ": expected atom count, got '" + std::string(count_tok) + "'", header_line);
    }
    if (li + 1 >= lines.size()) throw ParseError(frame + ": missing comment line", header_line + 1);
    const std::size_t comment_line = li + 2;
    const auto kv = parse_comment(lines[li + 1], comment_line);

    Configuration cfg;
    std::vector<Column> cols{{"species", 'S', 1}, {"pos", 'R', 3}};
    std::optional<std::array<bool, 3>> pbc;
    for (const auto& [key, value] : kv) {
      if (key == "energy") {
        cfg.energy = require_double(value, comment_line, "energy");
      } else if (key == "energy_pred") {
        cfg.energy_pred = require_double(value, comment_line, "energy_pred");
      } else if (key == "Properties") {
        cols = parse_properties(value, comment_line);
      } else if (key == "Lattice") {
        const auto toks = split_ws(value);
        if (toks.size() != 9) throw ParseError(frame + ": Lattice needs 9 numbers", comment_line);
        Cell cell;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) cell.lattice[r][c] = require_double(toks[3 * r + c], comment_line, "Lattice entry");
        cfg.cell = cell;
      } else if (key == "pbc") {
        const auto toks = split_ws(value);
        if (toks.size() != 3) throw ParseError(frame + ": pbc needs 3 flags", comment_line);
        std::array<bool, 3> flags{};
        for (int a = 0; a < 3; ++a) {
          if (toks[a] == "T" || toks[a] == "True" || toks[a] == "1") flags[a] = true;
          else if (toks[a] == "F" || toks[a] == "False" || toks[a] == "0") flags[a] = false;
          else throw ParseError(frame + ": bad pbc flag '" + std::string(toks[a]) + "'", comment_line);
        }
        pbc = flags;
      } else {
        cfg.metadata.emplace_back(key, value);
      }
    }
    if (cfg.cell && pbc) cfg.cell->pbc = *pbc;

    int species_col = -1, pos_col = -1, forces_col = -1, pred_col = -1;
    std::size_t total_width = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Column& col = cols[c];
      if ((col.name == "species" && col.type == 'S' && col.width == 1) ||
          (col.name == "Z" && col.type == 'I' && col.width == 1)) {
        species_col = static_cast<int>(c);
      } else if (col.name == "pos" && col.type == 'R' && col.width == 3) {
        pos_col = static_cast<int>(c);
      } else if ((col.name == "forces" || col.name == "force") && col.type == 'R' && col.width == 3) {
        forces_col = static_cast<int>(c);
      } else if (col.name == "forces_pred" && col.type == 'R' && col.width == 3) {
        pred_col = static_cast<int>(c);
      } else {
        cfg.extra_columns.push_back({col.name, col.type, col.width, {}});
      }
      total_width += static_cast<std::size_t>(col.width);
    }
    if (species_col < 0 || pos_col < 0) {
      throw ParseError(frame + ": Properties must declare species and pos columns", comment_line);
    }

    cfg.positions.resize(natoms);
    cfg.species.resize(natoms);
    if (forces_col >= 0) cfg.forces.emplace(natoms);
    if (pred_col >= 0) cfg.forces_pred.emplace(natoms);
    for (std::size_t a = 0; a < natoms; ++a) {
      const std::size_t row = li + 2 + a;
      if (row >= lines.size() || trim(lines[row]).empty()) {
        throw ParseError(frame + ": header declares " + std::to_string(natoms) + " atoms but only " +
                             std::to_string(a) + " atom lines follow",
                         row + 1);
      }
      const auto toks = split_ws(lines[row]);
      if (toks.size() != total_width) {
        throw ParseError(frame + ": expected " + std::to_string(total_width) + " columns, found " +
                             std::to_string(toks.size()),
                         row + 1);
      }
      std::size_t t = 0;
      std::size_t extra = 0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const Column& col = cols[c];
        const int ci = static_cast<int>(c);
        if (ci == species_col) {
          if (col.type == 'S') {
            try {
              cfg.species[a] = atomic_number(std::string(toks[t]));
            } catch (const DataError& e) {
              throw ParseError(frame + ": " + e.what(), row + 1);
            }
          } else {
            int z = 0;
            auto [p2, e2] = std::from_chars(toks[t].data(), toks[t].data() + toks[t].size(), z);
            if (e2 != std::errc() || p2 != toks[t].data() + toks[t].size() || z < 1) {
              throw ParseError(frame + ": bad atomic number '" + std::string(toks[t]) + "'", row + 1);
            }
            cfg.species[a] = z;
          }
        } else if (ci == pos_col || ci == forces_col || ci == pred_col) {
          Vec3 v{};
          for (int d = 0; d < 3; ++d) v[d] = require_double(toks[t + d], row + 1, col.name + " component");
          if (ci == pos_col) cfg.positions[a] = v;
          else if (ci == forces_col) (*cfg.forces)[a] = v;
          else (*cfg.forces_pred)[a] = v;
        } else {
          auto& ec2 = cfg.extra_columns[extra++];
          for (int d = 0; d < col.width; ++d) ec2.values.emplace_back(toks[t + d]);
        }
        t += static_cast<std::size_t>(col.width);
      }
    }
    try {
      cfg.validate();
    } catch (const DataError& e) {
      throw ParseError(frame + ": " + e.what(), header_line);
    }
    configs.push_back(std::move(cfg));
    li += 2 + natoms;
  }
  return configs;
}

std::vector<Configuration> read_extxyz_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_extxyz(ss.str());
}

std::string write_extxyz(const std::vector<Configuration>& configs, bool include_predictions) {
  std::string out;
  for (const Configuration& cfg : configs) {
    const std::size_t n = cfg.size();
    const bool write_pred_forces = include_predictions && cfg.forces_pred.has_value();
    out += std::to_string(n) + "\n";

    std::string props = "species:S:1:pos:R:3";
    if (cfg.forces) props += ":forces:R:3";
    for (const auto& col : cfg.extra_columns) props += ":" + col.name + ":" + col.type + ":" + std::to_string(col.width);
    if (write_pred_forces) props += ":forces_pred:R:3";

    std::string comment;
    if (cfg.cell) {
      comment += "Lattice=\"";
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) comment += (r + c ? " " : "") + format_double(cfg.cell->lattice[r][c]);
      comment += "\" ";
    }
    comment += "Properties=" + props;
    if (cfg.energy) comment += " energy=" + format_double(*cfg.energy);
    if (include_predictions && cfg.energy_pred) comment += " energy_pred=" + format_double(*cfg.energy_pred);
    if (cfg.cell) {
      comment += " pbc=\"";
      for (int a = 0; a < 3; ++a) comment += std::string(a ? " " : "") + (cfg.cell->pbc[a] ? "T" : "F");
      comment += "\"";
    }
    for (const auto& [k, v] : cfg.metadata) comment += " " + k + "=" + (needs_quotes(v) ? "\"" + v + "\"" : v);
    out += comment + "\n";

    for (std::size_t a = 0; a < n; ++a) {
      std::string line = element_symbol(cfg.species[a]);
      for (double x : cfg.positions[a]) line += " " + format_double(x);
      if (cfg.forces)
        for (double x : (*cfg.forces)[a]) line += " " + format_double(x);
      for (const auto& col : cfg.extra_columns)
        for (int d = 0; d < col.width; ++d) line += " " + col.values[a * static_cast<std::size_t>(col.width) + d];
      if (write_pred_forces)
        for (double x : (*cfg.forces_pred)[a]) line += " " + format_double(x);
      out += line + "\n";
    }
  }
  return out;
}

void write_extxyz_file(const std::string& path, const std::vector<Configuration>& configs, bool include_predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << write_extxyz(configs, include_predictions);
}

}  // namespace mace
