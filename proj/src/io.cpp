#include "ch1d/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace ch1d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw IoError("cannot parse '" + std::string(s) + "' as a number in " +
                  context);
  }
  return v;
}

long parse_long(std::string_view s, const std::string& context) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("cannot parse '" + std::string(s) + "' as an integer in " +
                  context);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos &&
      s.find('\n') == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// Header metadata lines look like "# key=value".
void parse_meta(const std::string& line,
                std::vector<std::pair<std::string, std::string>>& meta) {
  std::size_t at = line.find_first_not_of("# \t");
  if (at == std::string::npos) return;
  const std::size_t eq = line.find('=', at);
  if (eq == std::string::npos) return;
  meta.emplace_back(line.substr(at, eq - at), line.substr(eq + 1));
}

std::string meta_value(
    const std::vector<std::pair<std::string, std::string>>& meta,
    const std::string& key, const std::string& context) {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw IoError("missing metadata '" + key + "' in " + context);
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() +
                    ": " + ec.message());
    }
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

// --- fields ------------------------------------------------------------------

void save_complex_csv(const fs::path& path, const ComplexField& u) {
  std::string out;
  out.reserve(static_cast<std::size_t>(u.grid.n) * 64 + 128);
  out += "# kind=complex_field\n";
  out += "# version=" + std::string(kVersion) + "\n";
  out += "# alpha=" + fmt_full(u.alpha) + "\n";
  out += std::string("# boundary_enforced=") + (u.boundary_enforced ? "1" : "0") + "\n";
  out += "x,u1,u2\n";
  for (int i = 0; i < u.grid.n; ++i) {
    out += fmt_full(u.grid.x(i));
    out += ',';
    out += fmt_full(u.u1[i]);
    out += ',';
    out += fmt_full(u.u2[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

namespace {

struct CsvBody {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvBody read_csv_body(const fs::path& path) {
  const std::string content = read_text_file(path);
  CsvBody body;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      parse_meta(line, body.meta);
    } else if (!have_header) {
      body.header = split_csv_line(line);
      have_header = true;
    } else {
      body.rows.push_back(split_csv_line(line));
    }
  }
  if (!have_header) throw IoError("no header row in " + path.string());
  return body;
}

}  // namespace

ComplexField load_complex_csv(const fs::path& path) {
  const CsvBody body = read_csv_body(path);
  const std::string ctx = path.string();
  if (body.header != std::vector<std::string>{"x", "u1", "u2"}) {
    throw IoError("unexpected columns in " + ctx);
  }
  const double alpha = parse_double(meta_value(body.meta, "alpha", ctx), ctx);
  const bool enforced = meta_value(body.meta, "boundary_enforced", ctx) == "1";
  const int n = static_cast<int>(body.rows.size());
  Grid grid = make_grid(n);
  std::vector<double> u1(static_cast<std::size_t>(n));
  std::vector<double> u2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (body.rows[i].size() != 3) throw IoError("short row in " + ctx);
    u1[i] = parse_double(body.rows[i][1], ctx);
    u2[i] = parse_double(body.rows[i][2], ctx);
  }
  ComplexField u = make_complex_field(grid, std::move(u1), std::move(u2), alpha,
                                      false);
  u.boundary_enforced = enforced;
  return u;
}

void save_polar_csv(const fs::path& path, const PolarField& p) {
  std::string out;
  out.reserve(static_cast<std::size_t>(p.grid.n) * 64 + 128);
  out += "# kind=polar_field\n";
  out += "# version=" + std::string(kVersion) + "\n";
  out += "# alpha=" + fmt_full(p.alpha) + "\n";
  out += "# M=" + std::to_string(p.M) + "\n";
  out += std::string("# boundary_enforced=") + (p.boundary_enforced ? "1" : "0") + "\n";
  out += "x,rho,theta\n";
  for (int i = 0; i < p.grid.n; ++i) {
    out += fmt_full(p.grid.x(i));
    out += ',';
    out += fmt_full(p.rho[i]);
    out += ',';
    out += fmt_full(p.theta[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

PolarField load_polar_csv(const fs::path& path) {
  const CsvBody body = read_csv_body(path);
  const std::string ctx = path.string();
  if (body.header != std::vector<std::string>{"x", "rho", "theta"}) {
    throw IoError("unexpected columns in " + ctx);
  }
  const double alpha = parse_double(meta_value(body.meta, "alpha", ctx), ctx);
  const int m = static_cast<int>(parse_long(meta_value(body.meta, "M", ctx), ctx));
  const bool enforced = meta_value(body.meta, "boundary_enforced", ctx) == "1";
  const int n = static_cast<int>(body.rows.size());
  Grid grid = make_grid(n);
  std::vector<double> rho(static_cast<std::size_t>(n));
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (body.rows[i].size() != 3) throw IoError("short row in " + ctx);
    rho[i] = parse_double(body.rows[i][1], ctx);
    theta[i] = parse_double(body.rows[i][2], ctx);
  }
  PolarField p = make_polar_field(grid, std::move(rho), std::move(theta), m,
                                  alpha, false);
  p.boundary_enforced = enforced;
  return p;
}

// --- structured values -------------------------------------------------------

json breakdown_to_json(const EnergyBreakdown& b) {
  return json{{"gradient_term", b.gradient_term},
              {"potential_term", b.potential_term},
              {"twist_term", b.twist_term},
              {"total", b.total}};
}

EnergyBreakdown breakdown_from_json(const json& j) {
  EnergyBreakdown b;
  b.gradient_term = j.at("gradient_term").get<double>();
  b.potential_term = j.at("potential_term").get<double>();
  b.twist_term = j.at("twist_term").get<double>();
  b.total = j.at("total").get<double>();
  return b;
}

json jump_map_to_json(const JumpMap& jm) {
  json pieces = json::array();
  for (const JumpPiece& p : jm.pieces) {
    pieces.push_back(json{{"x", p.x}, {"theta", p.theta}});
  }
  return json{{"alpha", jm.alpha},
              {"twist_count", jm.twist_count},
              {"jumps", jm.jumps},
              {"pieces", pieces}};
}

JumpMap jump_map_from_json(const json& j) {
  std::vector<JumpPiece> pieces;
  for (const json& pj : j.at("pieces")) {
    JumpPiece p;
    p.x = pj.at("x").get<std::vector<double>>();
    p.theta = pj.at("theta").get<std::vector<double>>();
    pieces.push_back(std::move(p));
  }
  return make_jump_map(j.at("jumps").get<std::vector<double>>(),
                       std::move(pieces), j.at("alpha").get<double>(),
                       j.at("twist_count").get<double>());
}

json report_to_json(const MinimizeReport& r) {
  json j{{"energy", breakdown_to_json(r.energy)},
         {"iterations", r.iterations},
         {"grad_norm", r.grad_norm},
         {"converged", r.converged},
         {"constraint_active", r.constraint_active}};
  if (r.winding.has_value()) {
    j["winding"] = *r.winding;
  } else {
    j["winding"] = nullptr;
  }
  return j;
}

MinimizeReport report_from_json(const json& j) {
  MinimizeReport r;
  r.energy = breakdown_from_json(j.at("energy"));
  r.iterations = j.at("iterations").get<int>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.constraint_active = j.at("constraint_active").get<bool>();
  if (!j.at("winding").is_null()) r.winding = j.at("winding").get<int>();
  return r;
}

json extrapolation_to_json(const Extrapolation& e) {
  return json{{"limit", e.limit}, {"order", e.order}, {"ok", e.ok}};
}

Extrapolation extrapolation_from_json(const json& j) {
  Extrapolation e;
  e.limit = j.at("limit").get<double>();
  e.order = j.at("order").get<double>();
  e.ok = j.at("ok").get<bool>();
  return e;
}

// --- sweep tables ------------------------------------------------------------

std::string limit_kind_name(LimitKind kind) {
  switch (kind) {
    case LimitKind::NoJumpAtN: return "no_jump_at_n";
    case LimitKind::NoJumpAtNMinusOne: return "no_jump_at_n_minus_1";
    case LimitKind::OneJump: return "one_jump";
    case LimitKind::Tie: return "tie";
  }
  return "no_jump_at_n";
}

LimitKind limit_kind_from_name(const std::string& name) {
  if (name == "no_jump_at_n") return LimitKind::NoJumpAtN;
  if (name == "no_jump_at_n_minus_1") return LimitKind::NoJumpAtNMinusOne;
  if (name == "one_jump") return LimitKind::OneJump;
  if (name == "tie") return LimitKind::Tie;
  throw IoError("unknown classification label '" + name + "'");
}

void save_sweep_csv(const fs::path& path, const std::vector<SweepCell>& cells) {
  std::string out;
  out.reserve(cells.size() * 128 + 256);
  out += "# kind=phase_diagram\n";
  out += "# version=" + std::string(kVersion) + "\n";
  out +=
      "L,alpha,energy,jumps,winding,predicted,predicted_energy,"
      "boundary_distance,agree,status\n";
  for (const SweepCell& c : cells) {
    out += fmt_full(c.L);
    out += ',';
    out += fmt_full(c.alpha);
    out += ',';
    out += fmt_full(c.energy);
    out += ',';
    out += std::to_string(c.jumps);
    out += ',';
    out += std::to_string(c.winding);
    out += ',';
    out += limit_kind_name(c.predicted);
    out += ',';
    out += fmt_full(c.predicted_energy);
    out += ',';
    out += fmt_full(c.boundary_distance);
    out += ',';
    out += c.agree ? "1" : "0";
    out += ',';
    out += csv_quote(c.status);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<SweepCell> load_sweep_csv(const fs::path& path) {
  const CsvBody body = read_csv_body(path);
  const std::string ctx = path.string();
  const std::vector<std::string> expect{
      "L", "alpha", "energy", "jumps", "winding", "predicted",
      "predicted_energy", "boundary_distance", "agree", "status"};
  if (body.header != expect) {
    throw IoError("unexpected columns in " + ctx);
  }
  std::vector<SweepCell> cells;
  cells.reserve(body.rows.size());
  for (const auto& row : body.rows) {
    if (row.size() != expect.size()) throw IoError("short row in " + ctx);
    SweepCell c;
    c.L = parse_double(row[0], ctx);
    c.alpha = parse_double(row[1], ctx);
    c.energy = parse_double(row[2], ctx);
    c.jumps = static_cast<int>(parse_long(row[3], ctx));
    c.winding = static_cast<int>(parse_long(row[4], ctx));
    c.predicted = limit_kind_from_name(row[5]);
    c.predicted_energy = parse_double(row[6], ctx);
    c.boundary_distance = parse_double(row[7], ctx);
    c.agree = row[8] == "1";
    c.status = row[9];
    cells.push_back(std::move(c));
  }
  return cells;
}

// --- generic numeric tables ----------------------------------------------------

void save_table_csv(const fs::path& path, const NumericTable& t) {
  std::string out;
  out.reserve(t.rows.size() * 64 + 128);
  out += "# kind=table\n";
  out += "# version=" + std::string(kVersion) + "\n";
  std::string header;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) header += ',';
    header += t.columns[c];
  }
  if (!t.text_column.empty()) {
    if (!header.empty()) header += ',';
    header += t.text_column;
  }
  out += header + "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.columns.size()) {
      throw IoError("table row width mismatch while writing " + path.string());
    }
    std::string line;
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
      if (c) line += ',';
      line += fmt_full(t.rows[r][c]);
    }
    if (!t.text_column.empty()) {
      if (!line.empty()) line += ',';
      line += csv_quote(r < t.text.size() ? t.text[r] : std::string{});
    }
    out += line + "\n";
  }
  write_text_file(path, out);
}

NumericTable load_table_csv(const fs::path& path) {
  const CsvBody body = read_csv_body(path);
  const std::string ctx = path.string();
  NumericTable t;
  t.columns = body.header;
  // A trailing non-numeric column is detected from the first row.
  bool has_text = false;
  if (!body.rows.empty() && !body.rows[0].empty()) {
    const std::string& last = body.rows[0].back();
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(last.data(), last.data() + last.size(), v);
    has_text = (ec != std::errc{} || ptr != last.data() + last.size());
  }
  if (has_text) {
    t.text_column = t.columns.back();
    t.columns.pop_back();
  }
  for (const auto& row : body.rows) {
    if (row.size() != t.columns.size() + (has_text ? 1 : 0)) {
      throw IoError("short row in " + ctx);
    }
    std::vector<double> vals;
    vals.reserve(t.columns.size());
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      vals.push_back(parse_double(row[c], ctx));
    }
    t.rows.push_back(std::move(vals));
    if (has_text) t.text.push_back(row.back());
  }
  return t;
}

}  // namespace ch1d
