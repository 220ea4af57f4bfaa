// Copyright 2026 The spice-pce Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "network.hpp"

namespace spice {
namespace {

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // source line of each row
};

[[noreturn]] void syntax_error(int line, const std::string& what) {
  fail(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

std::string_view strip_comment(std::string_view line) {
  const auto pos = line.find('%');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view tok, int line) {
  if (tok == "Inf" || tok == "inf") return HUGE_VAL;
  if (tok == "-Inf" || tok == "-inf") return -HUGE_VAL;
  double v = 0.0;
  std::string buf(tok);
  if (!buf.empty() && buf.front() == '+') buf.erase(0, 1);
  auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size()) syntax_error(line, "invalid number '" + std::string(tok) + "'");
  return v;
}

// Splits the matrix body into rows (';' or newline) of numbers (whitespace or ',').
void append_matrix_text(Table& table, std::string_view body, int line, std::vector<double>& pending) {
  std::size_t i = 0;
  auto flush = [&]() {
    if (!pending.empty()) {
      table.rows.push_back(pending);
      table.lines.push_back(line);
      pending.clear();
    }
  };
  while (i < body.size()) {
    const char c = body[i];
    if (c == ';') {
      flush();
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else {
      std::size_t j = i;
      while (j < body.size() && !std::isspace(static_cast<unsigned char>(body[j])) && body[j] != ',' && body[j] != ';')
        ++j;
      pending.push_back(parse_number(body.substr(i, j - i), line));
      i = j;
    }
  }
}

struct RawCase {
  double base_mva = 100.0;
  std::map<std::string, Table> tables;
};

RawCase scan(std::string_view text) {
  RawCase raw;
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }

  std::string open_table;  // name of the matrix currently being read
  int open_line = 0;
  int brace_depth = 0;  // cell arrays such as mpc.bus_name = {...} are skipped
  std::vector<double> pending;

  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const int line_no = static_cast<int>(ln) + 1;
    std::string_view line = trim(strip_comment(lines[ln]));
    if (line.empty()) continue;

    if (brace_depth > 0) {
      for (char c : line) brace_depth += (c == '{') - (c == '}');
      continue;
    }

    if (!open_table.empty()) {
      const auto close = line.find(']');
      std::string_view body = close == std::string_view::npos ? line : line.substr(0, close);
      Table& t = raw.tables[open_table];
      append_matrix_text(t, body, line_no, pending);
      if (!pending.empty()) {  // a newline also terminates a row
        t.rows.push_back(pending);
        t.lines.push_back(line_no);
        pending.clear();
      }
      if (close != std::string_view::npos) open_table.clear();
      continue;
    }

    if (line.starts_with("function")) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) syntax_error(line_no, "expected assignment");
    std::string_view lhs = trim(line.substr(0, eq));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (!lhs.starts_with("mpc.")) syntax_error(line_no, "expected 'mpc.<field> = ...'");
    const std::string field(lhs.substr(4));

    if (!rhs.empty() && rhs.front() == '{') {
      for (char c : rhs) brace_depth += (c == '{') - (c == '}');
      continue;
    }
    if (!rhs.empty() && rhs.front() == '[') {
      rhs.remove_prefix(1);
      raw.tables[field] = Table{};
      const auto close = rhs.find(']');
      Table& t = raw.tables[field];
      append_matrix_text(t, close == std::string_view::npos ? rhs : rhs.substr(0, close), line_no, pending);
      if (!pending.empty()) {
        t.rows.push_back(pending);
        t.lines.push_back(line_no);
        pending.clear();
      }
      if (close == std::string_view::npos) {
        open_table = field;
        open_line = line_no;
      }
      continue;
    }
    if (field == "baseMVA") {
      if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
      raw.base_mva = parse_number(trim(rhs), line_no);
      continue;
    }
    // scalar / string fields such as mpc.version are ignored
  }
  if (!open_table.empty()) syntax_error(open_line, "unterminated matrix 'mpc." + open_table + "'");
  if (brace_depth > 0) syntax_error(static_cast<int>(lines.size()), "unterminated cell array");
  return raw;
}

const Table& need_table(const RawCase& raw, const std::string& name) {
  auto it = raw.tables.find(name);
  if (it == raw.tables.end()) fail(ErrorKind::Parse, "missing table mpc." + name);
  return it->second;
}

void need_columns(const Table& t, std::size_t r, std::size_t cols, const std::string& name) {
  if (t.rows[r].size() < cols)
    syntax_error(t.lines[r], "mpc." + name + " row needs at least " + std::to_string(cols) + " columns");
}

}  // namespace

Network parse_matpower(std::string_view text) {
  const RawCase raw = scan(text);
  const double base = raw.base_mva;
  if (!(base > 0.0)) fail(ErrorKind::Parse, "mpc.baseMVA must be positive");

  const Table& bus_t = need_table(raw, "bus");
  const Table& gen_t = need_table(raw, "gen");
  const Table& branch_t = need_table(raw, "branch");
  const Table* cost_t = raw.tables.contains("gencost") ? &raw.tables.at("gencost") : nullptr;
  if (cost_t && cost_t->rows.size() < gen_t.rows.size())
    fail(ErrorKind::Parse, "mpc.gencost has fewer rows than mpc.gen");

  std::map<int, std::size_t> bus_pos;
  for (std::size_t r = 0; r < bus_t.rows.size(); ++r) {
    need_columns(bus_t, r, 13, "bus");
    bus_pos[static_cast<int>(bus_t.rows[r][0])] = r;
  }

  // In-service generators, keeping their gencost rows aligned.
  std::vector<Generator> gens;
  std::map<int, double> vset;
  for (std::size_t r = 0; r < gen_t.rows.size(); ++r) {
    need_columns(gen_t, r, 10, "gen");
    const auto& g = gen_t.rows[r];
    if (g[7] <= 0) continue;
    Generator gen;
    gen.bus = static_cast<int>(g[0]);
    if (!bus_pos.contains(gen.bus)) syntax_error(gen_t.lines[r], "generator references missing bus " + std::to_string(gen.bus));
    gen.p_nom = g[1] / base;
    gen.q_max = g[3] / base;
    gen.q_min = g[4] / base;
    gen.v_nom = g[5];
    gen.p_max = g[8] / base;
    gen.p_min = g[9] / base;
    if (cost_t) {
      const auto& c = cost_t->rows[r];
      if (c.size() < 4) syntax_error(cost_t->lines[r], "mpc.gencost row too short");
      if (static_cast<int>(c[0]) != 2) syntax_error(cost_t->lines[r], "only polynomial gencost (model 2) is supported");
      const auto ncost = static_cast<std::size_t>(c[3]);
      if (c.size() < 4 + ncost) syntax_error(cost_t->lines[r], "mpc.gencost row shorter than NCOST");
      gen.cost.assign(ncost, 0.0);
      for (std::size_t k = 0; k < ncost; ++k) {
        const std::size_t power = ncost - 1 - k;  // MATPOWER lists the highest power first
        gen.cost[power] = c[4 + k] * std::pow(base, static_cast<double>(power));
      }
    }
    vset.try_emplace(gen.bus, gen.v_nom);
    gens.push_back(std::move(gen));
  }

  std::vector<Bus> buses;
  std::vector<Load> loads;
  for (std::size_t r = 0; r < bus_t.rows.size(); ++r) {
    const auto& b = bus_t.rows[r];
    Bus bus;
    bus.id = static_cast<int>(b[0]);
    switch (static_cast<int>(b[1])) {
      case 1: bus.kind = BusKind::PQ; break;
      case 2: bus.kind = vset.contains(bus.id) ? BusKind::PV : BusKind::PQ; break;
      case 3: bus.kind = BusKind::Slack; break;
      case 4: syntax_error(bus_t.lines[r], "isolated buses (type 4) are not supported");
      default: syntax_error(bus_t.lines[r], "invalid bus type " + std::to_string(b[1]));
    }
    bus.g_shunt = b[4] / base;
    bus.b_shunt = b[5] / base;
    bus.v_max = b[11];
    bus.v_min = b[12];
    bus.nominal_v = (bus.kind != BusKind::PQ && vset.contains(bus.id)) ? vset.at(bus.id) : b[7];
    if (b[2] != 0.0 || b[3] != 0.0) loads.push_back(Load{bus.id, b[2] / base, b[3] / base});
    buses.push_back(bus);
  }

  std::vector<Branch> branches;
  for (std::size_t r = 0; r < branch_t.rows.size(); ++r) {
    need_columns(branch_t, r, 11, "branch");
    const auto& b = branch_t.rows[r];
    if (b[10] <= 0) continue;
    Branch br;
    br.from_bus = static_cast<int>(b[0]);
    br.to_bus = static_cast<int>(b[1]);
    const std::complex<double> z(b[2], b[3]);
    if (std::abs(z) == 0.0) syntax_error(branch_t.lines[r], "branch has zero impedance");
    br.series_admittance = 1.0 / z;
    br.charging = b[4];
    br.s_max = b[5] / base;
    br.tap = b[8] == 0.0 ? 1.0 : b[8];
    br.shift = b[9] * std::numbers::pi / 180.0;
    branches.push_back(br);
  }

  return make_network(std::move(buses), std::move(branches), std::move(gens), std::move(loads), base);
}

}  // namespace spice
