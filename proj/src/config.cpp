#include "oflc/config.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "oflc/errors.hpp"

namespace oflc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::set<std::string> profile_keys{
      "profile", "value", "t0", "before", "after", "offset", "amplitude", "frequency", "phase",
      "points"};
  static const std::map<std::string, std::set<std::string>> keys = [] {
    std::map<std::string, std::set<std::string>> k{
        {"machine", {"R", "L_d", "L_q", "psi", "p"}},
        {"timing", {"duration", "dt_plant", "dt_ctrl", "horizon"}},
        {"limits", {"v_max"}},
        {"torque", profile_keys},
        {"speed", profile_keys},
        {"load", profile_keys},
        {"initial", {"i_d", "i_q", "theta"}},
        {"controller", {"kp", "ki", "alpha_z"}},
        {"run", {"controllers", "decimation"}},
    };
    k["speed"].insert({"source", "inertia", "friction", "initial_speed"});
    return k;
  }();
  return keys;
}

/// Section -> key -> entry, with line numbers for error reporting.
class Document {
 public:
  explicit Document(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
      start = end == std::string_view::npos ? text.size() + 1 : end + 1;
      ++line_no;

      if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) continue;

      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (!allowed_keys().contains(section)) {
          throw ParseError(line_no, "unknown section [" + section + "]");
        }
        if (!seen_sections_.insert(section).second) {
          throw ParseError(line_no, "duplicate section [" + section + "]");
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
      if (section.empty()) throw ParseError(line_no, "key outside of any section");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ParseError(line_no, "empty key");
      if (!allowed_keys().at(section).contains(key)) {
        throw ParseError(line_no, "unknown key '" + key + "' in [" + section + "]");
      }
      auto [it, inserted] = entries_[section].try_emplace(key, Entry{value, line_no, false});
      if (!inserted) {
        throw ParseError(line_no, "duplicate key '" + key + "' (first at line " +
                                      std::to_string(it->second.line) + ")");
      }
      lines_[key] = line_no;
    }
  }

  bool has_section(const std::string& section) const { return entries_.contains(section); }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto s = entries_.find(section);
    if (s == entries_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    return e ? parse_number(*e, key) : fallback;
  }

  double required_number(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ValidationError(key, "required in [" + section + "]");
    return parse_number(*e, key);
  }

  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
  }

  int line_of(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    return e ? e->line : 0;
  }

  /// Line of the last definition of `key` in any section, 0 if absent.
  int line_of_key(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  static double parse_number(const Entry& e, const std::string& key) {
    return parse_number(e.value, e.line, key);
  }

  static double parse_number(std::string_view text, int line, const std::string& key) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw ParseError(line, "'" + key + "' is not a number: '" + std::string(text) + "'");
    }
    return value;
  }

 private:
  std::map<std::string, std::map<std::string, Entry>> entries_;
  std::map<std::string, int> lines_;
  std::set<std::string> seen_sections_;
};

Profile parse_profile(const Document& doc, const std::string& section) {
  const Entry* kind = doc.find(section, "profile");
  if (!kind) throw ValidationError("profile", "required in [" + section + "]");
  const std::string& name = kind->value;
  if (name == "constant") {
    return ConstantProfile{doc.required_number(section, "value")};
  }
  if (name == "step") {
    return StepProfile{doc.required_number(section, "t0"), doc.number(section, "before", 0.0),
                       doc.required_number(section, "after")};
  }
  if (name == "sinusoid") {
    return SinusoidProfile{doc.number(section, "offset", 0.0),
                           doc.required_number(section, "amplitude"),
                           doc.required_number(section, "frequency"),
                           doc.number(section, "phase", 0.0)};
  }
  if (name == "table") {
    const Entry* pts = doc.find(section, "points");
    if (!pts) throw ValidationError("points", "required in [" + section + "]");
    TableProfile table;
    for (std::string_view item : split(pts->value, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(pts->line, "table point '" + std::string(item) + "' is not 't:value'");
      }
      table.points.emplace_back(
          Document::parse_number(trim(item.substr(0, colon)), pts->line, "points"),
          Document::parse_number(trim(item.substr(colon + 1)), pts->line, "points"));
    }
    return table;
  }
  throw ParseError(kind->line, "unknown profile '" + name + "' in [" + section + "]");
}

void write_profile(std::ostream& out, const Profile& profile) {
  std::visit(
      [&out](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantProfile>) {
          out << "profile = constant\nvalue = " << format_double(p.value) << "\n";
        } else if constexpr (std::is_same_v<T, StepProfile>) {
          out << "profile = step\nt0 = " << format_double(p.t0)
              << "\nbefore = " << format_double(p.before)
              << "\nafter = " << format_double(p.after) << "\n";
        } else if constexpr (std::is_same_v<T, SinusoidProfile>) {
          out << "profile = sinusoid\noffset = " << format_double(p.offset)
              << "\namplitude = " << format_double(p.amplitude)
              << "\nfrequency = " << format_double(p.frequency)
              << "\nphase = " << format_double(p.phase) << "\n";
        } else {
          out << "profile = table\npoints = ";
          for (std::size_t k = 0; k < p.points.size(); ++k) {
            out << (k ? ", " : "") << format_double(p.points[k].first) << ":"
                << format_double(p.points[k].second);
          }
          out << "\n";
        }
      },
      profile);
}

/// Re-throws a ValidationError with the config lines of the fields it names.
[[noreturn]] void rethrow_with_lines(const ValidationError& e, const Document& doc) {
  std::string lines;
  for (std::string_view field : split(e.field(), ',')) {
    if (const int line = doc.line_of_key(std::string(field)); line > 0) {
      lines += (lines.empty() ? "" : ", ") + std::string(field) + " at line " + std::to_string(line);
    }
  }
  if (lines.empty()) throw e;
  throw ValidationError(e.field(), e.reason() + " (" + lines + ")");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

ParsedConfig parse_config(std::string_view text) {
  const Document doc(text);
  ParsedConfig out;
  Scenario& s = out.scenario;
  RunConfig& run = out.run;

  try {
    if (!doc.has_section("machine")) throw ValidationError("machine", "section is required");
    const double p = doc.required_number("machine", "p");
    if (p != static_cast<double>(static_cast<int>(p))) {
      throw ValidationError("p", "must be an integer");
    }
    s.params = MachineParams(doc.required_number("machine", "R"),
                             doc.required_number("machine", "L_d"),
                             doc.required_number("machine", "L_q"),
                             doc.required_number("machine", "psi"), static_cast<int>(p));

    s.duration = doc.number("timing", "duration", s.duration);
    s.dt_plant = doc.number("timing", "dt_plant", s.dt_plant);
    s.dt_ctrl = doc.number("timing", "dt_ctrl", s.dt_ctrl);
    s.horizon = doc.number("timing", "horizon", s.horizon);
    s.v_max = doc.number("limits", "v_max", s.v_max);

    if (!doc.has_section("torque")) throw ValidationError("torque", "section is required");
    s.torque_ref = parse_profile(doc, "torque");

    const std::string source = doc.text("speed", "source", "prescribed");
    if (source == "prescribed") {
      s.speed = doc.find("speed", "profile") ? parse_profile(doc, "speed")
                                             : Profile{ConstantProfile{0.0}};
    } else if (source == "mechanical") {
      MechanicalModel mech;
      mech.inertia = doc.required_number("speed", "inertia");
      mech.friction = doc.number("speed", "friction", 0.0);
      mech.initial_speed = doc.number("speed", "initial_speed", 0.0);
      mech.load = doc.has_section("load") ? parse_profile(doc, "load") : Profile{ConstantProfile{}};
      s.speed = mech;
    } else {
      throw ParseError(doc.line_of("speed", "source"), "unknown speed source '" + source + "'");
    }

    s.initial_current = {doc.number("initial", "i_d", 0.0), doc.number("initial", "i_q", 0.0)};
    s.initial_theta = doc.number("initial", "theta", 0.0);
    s.gains = {doc.number("controller", "kp", s.gains.kp), doc.number("controller", "ki", s.gains.ki)};
    s.alpha_z = doc.number("controller", "alpha_z", s.alpha_z);

    if (const Entry* list = doc.find("run", "controllers")) {
      run.controllers.clear();
      for (std::string_view name : split(list->value, ',')) {
        run.controllers.push_back(parse_controller_kind(std::string(name)));
      }
    }
    const double decimation = doc.number("run", "decimation", 1.0);
    if (!(decimation >= 1.0) || decimation != static_cast<double>(static_cast<int>(decimation))) {
      throw ValidationError("decimation", "must be an integer >= 1");
    }
    run.decimation = static_cast<int>(decimation);

    s.validate();
  } catch (const ValidationError& e) {
    rethrow_with_lines(e, doc);
  }
  return out;
}

std::string serialize_config(const Scenario& s, const RunConfig& run) {
  std::ostringstream out;
  const MachineParams& m = s.params;
  out << "[machine]\nR = " << format_double(m.R()) << "\nL_d = " << format_double(m.L_d())
      << "\nL_q = " << format_double(m.L_q()) << "\npsi = " << format_double(m.psi())
      << "\np = " << m.p() << "\n\n";
  out << "[timing]\nduration = " << format_double(s.duration)
      << "\ndt_plant = " << format_double(s.dt_plant)
      << "\ndt_ctrl = " << format_double(s.dt_ctrl)
      << "\nhorizon = " << format_double(s.horizon) << "\n\n";
  out << "[limits]\nv_max = " << format_double(s.v_max) << "\n\n";
  out << "[torque]\n";
  write_profile(out, s.torque_ref);
  out << "\n[speed]\n";
  if (const auto* mech = std::get_if<MechanicalModel>(&s.speed)) {
    out << "source = mechanical\ninertia = " << format_double(mech->inertia)
        << "\nfriction = " << format_double(mech->friction)
        << "\ninitial_speed = " << format_double(mech->initial_speed) << "\n\n[load]\n";
    write_profile(out, mech->load);
  } else {
    out << "source = prescribed\n";
    write_profile(out, std::get<Profile>(s.speed));
  }
  out << "\n[initial]\ni_d = " << format_double(s.initial_current.i_d)
      << "\ni_q = " << format_double(s.initial_current.i_q)
      << "\ntheta = " << format_double(s.initial_theta) << "\n\n";
  out << "[controller]\nkp = " << format_double(s.gains.kp)
      << "\nki = " << format_double(s.gains.ki)
      << "\nalpha_z = " << format_double(s.alpha_z) << "\n\n";
  out << "[run]\ncontrollers = ";
  for (std::size_t k = 0; k < run.controllers.size(); ++k) {
    out << (k ? ", " : "") << to_string(run.controllers[k]);
  }
  out << "\ndecimation = " << run.decimation << "\n";
  return out.str();
}

void apply_overrides(Scenario& scenario, const RunConfig& run) {
  if (run.v_max) scenario.v_max = *run.v_max;
  if (run.horizon) scenario.horizon = *run.horizon;
  if (run.kp) scenario.gains.kp = *run.kp;
  if (run.ki) scenario.gains.ki = *run.ki;
  if (run.alpha_z) scenario.alpha_z = *run.alpha_z;
  if (run.decimation < 1) throw ValidationError("decimation", "must be an integer >= 1");
  scenario.validate();
}

}  // namespace oflc
