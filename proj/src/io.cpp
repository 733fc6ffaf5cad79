#include "lipreach/io.hpp"

#include <yaml-cpp/yaml.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "lipreach/errors.hpp"
#include "lipreach/expr.hpp"

namespace lipreach::io {

namespace {

std::string dec(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string& s, int line, int column) {
    const char* b = s.c_str();
    char* e = nullptr;
    double v = std::strtod(b, &e);
    if (s.empty() || e != b + s.size()) throw ParseError("not a number: '" + s + "'", line, column);
    return v;
}

long long parse_int(const std::string& s, int line, int column) {
    const char* b = s.c_str();
    char* e = nullptr;
    long long v = std::strtoll(b, &e, 10);
    if (s.empty() || e != b + s.size()) throw ParseError("not an integer: '" + s + "'", line, column);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Values may hold anything; these three characters would break the layout.
std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else if (c == ',') out += "\\c";
        else out += c;
    }
    return out;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        char c = s[++i];
        out += c == 'n' ? '\n' : c == 'c' ? ',' : c;
    }
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::string header_text(const Header& h) {
    std::string out = "# lipreach-" + h.kind + " " + std::to_string(h.version.major) + "." +
                      std::to_string(h.version.minor) + "\n";
    for (const auto& [k, v] : h.meta) {
        if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos)
            throw UsageError("header key '" + k + "' contains '=' or a newline");
        out += "# " + k + "=" + escape(v) + "\n";
    }
    return out;
}

// Parses the header of `lines`, checks the kind and returns the index of the
// column line.
std::size_t parse_header(const std::vector<std::string>& lines, const std::string& kind, Header& h) {
    if (lines.empty()) throw ParseError("empty file", 1, 1);
    const std::string magic = "# lipreach-";
    if (lines[0].rfind(magic, 0) != 0) throw ParseError("missing '# lipreach-<kind> <version>' line", 1, 1);
    std::string rest = lines[0].substr(magic.size());
    auto space = rest.find(' ');
    if (space == std::string::npos) throw ParseError("missing version", 1, static_cast<int>(lines[0].size()));
    h.kind = rest.substr(0, space);
    if (h.kind != kind) throw ParseError("expected a " + kind + " file, found " + h.kind, 1, 12);
    std::string ver = rest.substr(space + 1);
    auto dot = ver.find('.');
    if (dot == std::string::npos) throw ParseError("bad version '" + ver + "'", 1, static_cast<int>(magic.size() + space + 2));
    int col = static_cast<int>(magic.size() + space + 2);
    h.version.major = static_cast<int>(parse_int(ver.substr(0, dot), 1, col));
    h.version.minor = static_cast<int>(parse_int(ver.substr(dot + 1), 1, col));
    if (h.version.major > kCurrentVersion.major)
        throw ParseError("unsupported " + kind + " format major version " + std::to_string(h.version.major), 1, col);
    std::size_t i = 1;
    for (; i < lines.size() && lines[i].rfind("# ", 0) == 0; ++i) {
        const std::string body = lines[i].substr(2);
        auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("header line without '='", static_cast<int>(i) + 1, 3);
        h.meta.emplace_back(body.substr(0, eq), unescape(body.substr(eq + 1)));
    }
    if (i >= lines.size()) throw ParseError("missing column line", static_cast<int>(i) + 1, 1);
    return i;
}

void expect_columns(const std::string& line, const std::string& want, std::size_t index) {
    if (line != want) throw ParseError("expected columns '" + want + "'", static_cast<int>(index) + 1, 1);
}

std::vector<std::string> fields(const std::string& line, std::size_t n, std::size_t index) {
    std::vector<std::string> f = split(line, ',');
    if (f.size() != n)
        throw ParseError("expected " + std::to_string(n) + " fields, found " + std::to_string(f.size()),
                         static_cast<int>(index) + 1, 1);
    return f;
}

std::string action_cell(const ActionPoint& a) { return encode_point(a.coords, a.tag); }

}  // namespace

const std::string* Header::find(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return &v;
    return nullptr;
}

std::string encode_point(const std::vector<double>& coords, int tag) {
    std::string out = std::to_string(tag) + ":";
    for (std::size_t i = 0; i < coords.size(); ++i) out += (i ? ";" : "") + dec(coords[i]);
    return out;
}

std::pair<std::vector<double>, int> decode_point(const std::string& cell) {
    auto colon = cell.find(':');
    if (colon == std::string::npos) throw ParseError("point '" + cell + "' lacks a tag", 0, 1);
    int tag = static_cast<int>(parse_int(cell.substr(0, colon), 0, 1));
    std::vector<double> coords;
    std::string rest = cell.substr(colon + 1);
    if (!rest.empty())
        for (const auto& p : split(rest, ';')) coords.push_back(parse_double(p, 0, static_cast<int>(colon) + 2));
    return {coords, tag};
}

namespace {
// decode_point with the row's line number attached to errors.
std::pair<std::vector<double>, int> point_at(const std::string& cell, std::size_t index) {
    try {
        return decode_point(cell);
    } catch (const ParseError& e) {
        throw ParseError(e.what(), static_cast<int>(index) + 1, e.column);
    }
}
}  // namespace

std::string write_trace(const Header& h, const std::vector<TraceRow>& rows) {
    Header hh = h;
    hh.kind = "trace";
    std::string out = header_text(hh) + "step,event,state,action,lower,upper,slack,store_size\n";
    for (const auto& r : rows)
        out += std::to_string(r.step) + "," + r.event + "," + encode_point(r.state.coords, r.state.tag) + "," +
               action_cell(r.action) + "," + dec(r.lower) + "," + dec(r.upper) + "," + dec(r.slack) + "," +
               std::to_string(r.store_size) + "\n";
    return out;
}

std::pair<Header, std::vector<TraceRow>> read_trace(const std::string& text) {
    Header h;
    auto lines = lines_of(text);
    std::size_t i = parse_header(lines, "trace", h);
    expect_columns(lines[i], "step,event,state,action,lower,upper,slack,store_size", i);
    std::vector<TraceRow> rows;
    for (++i; i < lines.size(); ++i) {
        auto f = fields(lines[i], 8, i);
        int ln = static_cast<int>(i) + 1;
        TraceRow r;
        r.step = parse_int(f[0], ln, 1);
        r.event = f[1];
        auto [sc, st] = point_at(f[2], i);
        r.state = StatePoint{sc, st};
        auto [ac, at] = point_at(f[3], i);
        r.action = ActionPoint{ac, at};
        r.lower = parse_double(f[4], ln, 1);
        r.upper = parse_double(f[5], ln, 1);
        r.slack = parse_double(f[6], ln, 1);
        r.store_size = static_cast<std::size_t>(parse_int(f[7], ln, 1));
        rows.push_back(std::move(r));
    }
    return {h, rows};
}

std::string write_curve(const Header& h, const std::vector<CurveRow>& rows) {
    Header hh = h;
    hh.kind = "curve";
    std::string out = header_text(hh) + "state,lower,upper\n";
    for (const auto& r : rows)
        out += encode_point(r.state.coords, r.state.tag) + "," + dec(r.lower) + "," + dec(r.upper) + "\n";
    return out;
}

std::pair<Header, std::vector<CurveRow>> read_curve(const std::string& text) {
    Header h;
    auto lines = lines_of(text);
    std::size_t i = parse_header(lines, "curve", h);
    expect_columns(lines[i], "state,lower,upper", i);
    std::vector<CurveRow> rows;
    for (++i; i < lines.size(); ++i) {
        auto f = fields(lines[i], 3, i);
        int ln = static_cast<int>(i) + 1;
        auto [c, t] = point_at(f[0], i);
        rows.push_back({StatePoint{c, t}, parse_double(f[1], ln, 1), parse_double(f[2], ln, 1)});
    }
    return {h, rows};
}

std::string write_action_map(const Header& h, const std::vector<ActionMapRow>& rows) {
    Header hh = h;
    hh.kind = "actionmap";
    std::string out = header_text(hh) + "state,actions\n";
    for (const auto& r : rows) {
        std::string joined;
        for (std::size_t i = 0; i < r.actions.size(); ++i) {
            if (r.actions[i].find_first_of(",|\n") != std::string::npos)
                throw UsageError("action label '" + r.actions[i] + "' contains a reserved character");
            joined += (i ? "|" : "") + r.actions[i];
        }
        out += encode_point(r.state.coords, r.state.tag) + "," + joined + "\n";
    }
    return out;
}

std::pair<Header, std::vector<ActionMapRow>> read_action_map(const std::string& text) {
    Header h;
    auto lines = lines_of(text);
    std::size_t i = parse_header(lines, "actionmap", h);
    expect_columns(lines[i], "state,actions", i);
    std::vector<ActionMapRow> rows;
    for (++i; i < lines.size(); ++i) {
        auto f = fields(lines[i], 2, i);
        auto [c, t] = point_at(f[0], i);
        ActionMapRow r{StatePoint{c, t}, {}};
        if (!f[1].empty()) r.actions = split(f[1], '|');
        rows.push_back(std::move(r));
    }
    return {h, rows};
}

std::string write_summary(const Header& h, const std::vector<std::pair<std::string, std::string>>& rows) {
    Header hh = h;
    hh.kind = "summary";
    std::string out = header_text(hh) + "key,value\n";
    for (const auto& [k, v] : rows) out += escape(k) + "," + escape(v) + "\n";
    return out;
}

std::pair<Header, std::vector<std::pair<std::string, std::string>>> read_summary(const std::string& text) {
    Header h;
    auto lines = lines_of(text);
    std::size_t i = parse_header(lines, "summary", h);
    expect_columns(lines[i], "key,value", i);
    std::vector<std::pair<std::string, std::string>> rows;
    for (++i; i < lines.size(); ++i) {
        auto f = fields(lines[i], 2, i);
        rows.emplace_back(unescape(f[0]), unescape(f[1]));
    }
    return {h, rows};
}

std::string write_snapshot(const BoundStore& store, const MdpModel& model) {
    Header h{"snapshot", kCurrentVersion, {}};
    std::string rl;
    for (std::size_t i = 0; i < store.region_lipschitz().size(); ++i)
        rl += (i ? ";" : "") + hex(store.region_lipschitz()[i]);
    h.meta = {{"model", model.name},
              {"fingerprint", model.fingerprint()},
              {"state_dim", std::to_string(store.state_dim())},
              {"action_dim", std::to_string(store.action_dim())},
              {"lipschitz_pair", hex(store.pair_lipschitz())},
              {"region_lipschitz", rl},
              {"records", std::to_string(store.size())}};
    std::string out = header_text(h) + "state,action,lower,upper,region,step\n";
    auto point = [](const std::vector<double>& c, int tag) {
        std::string s = std::to_string(tag) + ":";
        for (std::size_t i = 0; i < c.size(); ++i) s += (i ? ";" : "") + hex(c[i]);
        return s;
    };
    for (std::size_t i = 0; i < store.size(); ++i) {
        SampleRecord r = store.record(i);
        out += point(r.state.coords, r.state.tag) + "," + point(r.action.coords, r.action.tag) + "," + hex(r.lower) +
               "," + hex(r.upper) + "," + std::to_string(r.region) + "," + std::to_string(r.step) + "\n";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "# crc32=%08lx\n",
                  crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
    return out + buf;
}

std::vector<SampleRecord> read_snapshot(const std::string& text, const MdpModel& model) {
    const std::string tag = "# crc32=";
    auto at = text.rfind(tag);
    if (at == std::string::npos) throw IntegrityError("snapshot has no checksum line");
    std::string body = text.substr(0, at);
    std::string stored = text.substr(at + tag.size());
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx",
                  crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    if (stored != buf) throw IntegrityError("snapshot checksum mismatch: stored " + stored + ", computed " + buf);

    Header h;
    auto lines = lines_of(body);
    std::size_t i = parse_header(lines, "snapshot", h);
    auto need = [&](const std::string& key) {
        const std::string* v = h.find(key);
        if (!v) throw IntegrityError("snapshot header lacks '" + key + "'");
        return *v;
    };
    if (need("fingerprint") != model.fingerprint())
        throw IntegrityError("snapshot belongs to model fingerprint " + need("fingerprint") + ", not " +
                             model.fingerprint());
    if (parse_double(need("lipschitz_pair"), 0, 0) != model.lipschitz_pair)
        throw IntegrityError("snapshot was taken with a different Lipschitz constant");
    std::vector<double> rl;
    if (!need("region_lipschitz").empty())
        for (const auto& p : split(need("region_lipschitz"), ';')) rl.push_back(parse_double(p, 0, 0));
    std::vector<double> want;
    if (model.partition)
        for (const auto& r : model.partition->regions) want.push_back(r.lipschitz);
    if (rl != want) throw IntegrityError("snapshot was taken with different regional constants");
    expect_columns(lines[i], "state,action,lower,upper,region,step", i);
    std::vector<SampleRecord> out;
    for (++i; i < lines.size(); ++i) {
        auto f = fields(lines[i], 6, i);
        int ln = static_cast<int>(i) + 1;
        SampleRecord r;
        auto [sc, st] = point_at(f[0], i);
        auto [ac, at2] = point_at(f[1], i);
        r.state = StatePoint{sc, st};
        r.action = ActionPoint{ac, at2};
        r.lower = parse_double(f[2], ln, 1);
        r.upper = parse_double(f[3], ln, 1);
        r.region = static_cast<int>(parse_int(f[4], ln, 1));
        r.step = parse_int(f[5], ln, 1);
        out.push_back(std::move(r));
    }
    if (std::to_string(out.size()) != need("records")) throw IntegrityError("snapshot record count mismatch");
    return out;
}

BoundStore restore_store(const std::string& text, const MdpModel& model, StoreOptions options) {
    BoundStore store = BoundStore::for_model(model, options);
    for (const auto& r : read_snapshot(text, model)) store.restore(r);
    return store;
}

FiniteMdp parse_finite(const std::string& text) {
    FiniteMdp m;
    long long n = -1;
    bool have_initial = false;
    struct Entry {
        std::size_t s, a, t;
        double p;
    };
    std::vector<Entry> entries;
    std::vector<std::size_t> targets, sinks;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::vector<std::pair<std::string, int>> words;
        for (std::size_t i = 0; i < line.size();) {
            if (std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            words.emplace_back(line.substr(i, j - i), static_cast<int>(i) + 1);
            i = j;
        }
        if (words.empty()) continue;
        const std::string& key = words[0].first;
        auto index = [&](std::size_t w) {
            long long v = parse_int(words[w].first, ln, words[w].second);
            if (v < 0 || (n >= 0 && v >= n))
                throw ParseError("state index " + words[w].first + " out of range", ln, words[w].second);
            return static_cast<std::size_t>(v);
        };
        auto arity = [&](std::size_t k) {
            if (words.size() != k) throw ParseError("'" + key + "' takes " + std::to_string(k - 1) + " values", ln, 1);
        };
        if (key == "lipreach-finite") {
            arity(2);
            if (ln != 1 && !m.rows.empty()) throw ParseError("version line must come first", ln, 1);
            auto dot = words[1].first.find('.');
            int major = static_cast<int>(parse_int(words[1].first.substr(0, dot), ln, words[1].second));
            if (major > kCurrentVersion.major) throw ParseError("unsupported finite format version", ln, words[1].second);
        } else if (key == "states") {
            arity(2);
            if (n >= 0) throw ParseError("'states' given twice", ln, 1);
            n = parse_int(words[1].first, ln, words[1].second);
            if (n < 1) throw ParseError("need at least one state", ln, words[1].second);
        } else if (n < 0) {
            throw ParseError("'states' must come before '" + key + "'", ln, 1);
        } else if (key == "initial") {
            arity(2);
            m.initial = index(1);
            have_initial = true;
        } else if (key == "target" || key == "sink") {
            if (words.size() < 2) throw ParseError("'" + key + "' needs at least one state", ln, 1);
            for (std::size_t w = 1; w < words.size(); ++w) (key == "target" ? targets : sinks).push_back(index(w));
        } else if (key == "trans") {
            arity(5);
            Entry e{index(1), 0, index(3), 0};
            long long a = parse_int(words[2].first, ln, words[2].second);
            if (a < 0) throw ParseError("negative action index", ln, words[2].second);
            e.a = static_cast<std::size_t>(a);
            e.p = parse_double(words[4].first, ln, words[4].second);
            if (!(e.p >= 0 && e.p <= 1)) throw ParseError("probability outside [0,1]", ln, words[4].second);
            entries.push_back(e);
        } else {
            throw ParseError("unknown keyword '" + key + "'", ln, 1);
        }
    }
    if (n < 0) throw ParseError("missing 'states'", ln + 1, 1);
    if (!have_initial) throw ParseError("missing 'initial'", ln + 1, 1);
    const auto N = static_cast<std::size_t>(n);
    m.rows.resize(N);
    m.target.assign(N, 0);
    m.sink.assign(N, 0);
    for (auto t : targets) m.target[t] = 1;
    for (auto s : sinks) m.sink[s] = 1;
    for (const auto& e : entries) {
        auto& rows = m.rows[e.s];
        if (rows.size() <= e.a) rows.resize(e.a + 1);
        auto& row = rows[e.a];
        auto it = std::find_if(row.begin(), row.end(), [&](auto& x) { return x.first == e.t; });
        if (it != row.end()) it->second += e.p;
        else row.emplace_back(static_cast<std::uint32_t>(e.t), e.p);
    }
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t a = 0; a < m.rows[s].size(); ++a)
            if (m.rows[s][a].empty())
                throw ParseError("state " + std::to_string(s) + " has no transitions for action " + std::to_string(a),
                                 ln + 1, 1);
    try {
        m.validate();
    } catch (const UsageError& e) {
        throw ParseError(e.what(), ln + 1, 1);
    }
    return m;
}

std::string write_finite(const FiniteMdp& m) {
    std::string out = "lipreach-finite 1.0\nstates " + std::to_string(m.size()) + "\ninitial " +
                      std::to_string(m.initial) + "\n";
    std::string t, s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.target[i]) t += " " + std::to_string(i);
        if (m.sink[i]) s += " " + std::to_string(i);
    }
    if (!t.empty()) out += "target" + t + "\n";
    if (!s.empty()) out += "sink" + s + "\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t a = 0; a < m.rows[i].size(); ++a)
            for (auto [j, p] : m.rows[i][a])
                out += "trans " + std::to_string(i) + " " + std::to_string(a) + " " + std::to_string(j) + " " + dec(p) + "\n";
    return out;
}

// ---- YAML model files -----------------------------------------------------

namespace {

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) {
    YAML::Mark m = n.Mark();
    throw ParseError(what, m.line + 1, m.column + 1);
}

void allow_keys(const YAML::Node& n, std::initializer_list<const char*> keys, const std::string& where) {
    if (!n.IsMap()) fail(n, where + " must be a mapping");
    for (auto it = n.begin(); it != n.end(); ++it) {
        std::string k = it->first.as<std::string>();
        if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return k == x; }) == keys.end())
            fail(it->first, "unknown key '" + k + "' in " + where);
    }
}

YAML::Node need(const YAML::Node& n, const char* key, const std::string& where) {
    YAML::Node v = n[key];
    if (!v) fail(n, where + " needs '" + key + "'");
    return v;
}

double number(const YAML::Node& n) {
    if (!n.IsScalar()) fail(n, "expected a number");
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        fail(n, "expected a number, found '" + n.Scalar() + "'");
    }
}

int integer(const YAML::Node& n) {
    if (!n.IsScalar()) fail(n, "expected an integer");
    try {
        return n.as<int>();
    } catch (const YAML::Exception&) {
        fail(n, "expected an integer, found '" + n.Scalar() + "'");
    }
}

std::vector<double> numbers(const YAML::Node& n, std::size_t dim) {
    if (!n.IsSequence()) fail(n, "expected a list of numbers");
    if (dim != std::size_t(-1) && n.size() != dim) fail(n, "expected " + std::to_string(dim) + " numbers");
    std::vector<double> out;
    for (const auto& x : n) out.push_back(number(x));
    return out;
}

Expr expression(const YAML::Node& n, const std::vector<std::string>& vars) {
    if (!n.IsScalar()) fail(n, "expected an expression");
    try {
        return Expr::compile(n.Scalar(), vars);
    } catch (const ParseError& e) {
        YAML::Mark m = n.Mark();
        throw ParseError(e.what(), m.line + 1, m.column + e.column);
    }
}

std::vector<Expr> expressions(const YAML::Node& n, const std::vector<std::string>& vars, std::size_t dim) {
    if (!n.IsSequence()) fail(n, "expected a list of expressions");
    if (n.size() != dim) fail(n, "expected " + std::to_string(dim) + " expressions");
    std::vector<Expr> out;
    for (const auto& x : n) out.push_back(expression(x, vars));
    return out;
}

struct KernelSpec {
    enum class Kind { dirac, uniform, discrete, mixture } kind = Kind::dirac;
    int tag = 0;
    std::vector<Expr> at;
    std::vector<Expr> center;
    std::vector<Expr> halfwidth;
    std::vector<std::pair<Expr, std::shared_ptr<KernelSpec>>> parts;  // discrete / mixture
};

struct ModelContext {
    std::size_t dim = 0;
    std::vector<std::string> vars;
    std::vector<StateComponent> components;
    const Box& box_of(const YAML::Node& n, int tag) const {
        for (const auto& c : components)
            if (c.tag == tag) return c.box;
        fail(n, "no state component with tag " + std::to_string(tag));
    }
};

int tag_of(const YAML::Node& n) { return n["tag"] ? integer(n["tag"]) : 0; }

std::shared_ptr<KernelSpec> parse_kernel(const YAML::Node& n, const ModelContext& ctx) {
    allow_keys(n, {"dirac", "uniform", "discrete", "mixture"}, "kernel");
    if (n.size() != 1) fail(n, "a kernel has exactly one of dirac, uniform, discrete, mixture");
    auto k = std::make_shared<KernelSpec>();
    const std::string kind = n.begin()->first.as<std::string>();
    const YAML::Node body = n.begin()->second;
    if (kind == "dirac") {
        allow_keys(body, {"tag", "at"}, "dirac");
        k->kind = KernelSpec::Kind::dirac;
        k->tag = tag_of(body);
        ctx.box_of(body, k->tag);
        k->at = expressions(need(body, "at", "dirac"), ctx.vars, ctx.dim);
    } else if (kind == "uniform") {
        allow_keys(body, {"tag", "center", "halfwidth"}, "uniform");
        k->kind = KernelSpec::Kind::uniform;
        k->tag = tag_of(body);
        ctx.box_of(body, k->tag);
        k->center = expressions(need(body, "center", "uniform"), ctx.vars, ctx.dim);
        k->halfwidth = expressions(need(body, "halfwidth", "uniform"), ctx.vars, ctx.dim);
    } else if (kind == "discrete") {
        k->kind = KernelSpec::Kind::discrete;
        if (!body.IsSequence() || body.size() == 0) fail(body, "discrete needs a non-empty list");
        for (const auto& e : body) {
            allow_keys(e, {"weight", "tag", "at"}, "discrete entry");
            auto point = std::make_shared<KernelSpec>();
            point->tag = tag_of(e);
            ctx.box_of(e, point->tag);
            point->at = expressions(need(e, "at", "discrete entry"), ctx.vars, ctx.dim);
            k->parts.emplace_back(expression(need(e, "weight", "discrete entry"), ctx.vars), point);
        }
    } else {
        k->kind = KernelSpec::Kind::mixture;
        if (!body.IsSequence() || body.size() == 0) fail(body, "mixture needs a non-empty list");
        for (const auto& e : body) {
            allow_keys(e, {"weight", "kernel"}, "mixture entry");
            k->parts.emplace_back(expression(need(e, "weight", "mixture entry"), ctx.vars),
                                  parse_kernel(need(e, "kernel", "mixture entry"), ctx));
        }
    }
    return k;
}

TransitionKernel build_kernel(const KernelSpec& k, std::span<const double> v,
                              const std::vector<StateComponent>& components) {
    auto eval_all = [&](const std::vector<Expr>& es) {
        std::vector<double> out;
        for (const auto& e : es) out.push_back(e.eval(v));
        return out;
    };
    switch (k.kind) {
        case KernelSpec::Kind::dirac:
            return TransitionKernel::dirac(StatePoint{eval_all(k.at), k.tag});
        case KernelSpec::Kind::uniform: {
            auto c = eval_all(k.center), w = eval_all(k.halfwidth);
            Box raw{c, c};
            for (std::size_t j = 0; j < c.size(); ++j) {
                raw.lo[j] -= std::abs(w[j]);
                raw.hi[j] += std::abs(w[j]);
            }
            const Box* bounds = nullptr;
            for (const auto& comp : components)
                if (comp.tag == k.tag) bounds = &comp.box;
            return TransitionKernel::clipped_uniform(k.tag, raw, *bounds);
        }
        case KernelSpec::Kind::discrete: {
            std::vector<Atom> atoms;
            for (const auto& [w, p] : k.parts) {
                double m = w.eval(v);
                if (m != 0) atoms.push_back({StatePoint{eval_all(p->at), p->tag}, m});
            }
            return TransitionKernel::discrete(std::move(atoms));
        }
        case KernelSpec::Kind::mixture: {
            TransitionKernel out;
            for (const auto& [w, p] : k.parts) {
                double m = w.eval(v);
                if (m != 0) out.add(build_kernel(*p, v, components), m);
            }
            return out;
        }
    }
    return {};
}

RegionSet parse_shapes(const YAML::Node& n, const ModelContext& ctx, const std::string& where) {
    RegionSet out;
    if (!n.IsSequence()) fail(n, where + " must be a list of shapes");
    for (const auto& s : n) {
        allow_keys(s, {"box", "ball", "tag"}, "shape");
        if (s.size() != 1) fail(s, "a shape has exactly one of box, ball, tag");
        if (s["tag"]) {
            int tag = integer(s["tag"]);
            ctx.box_of(s, tag);
            out.merge(RegionSet::whole_tag(tag));
        } else if (s["box"]) {
            const YAML::Node b = s["box"];
            allow_keys(b, {"tag", "lo", "hi"}, "box");
            int tag = tag_of(b);
            ctx.box_of(b, tag);
            Box box{numbers(need(b, "lo", "box"), ctx.dim), numbers(need(b, "hi", "box"), ctx.dim)};
            for (std::size_t j = 0; j < ctx.dim; ++j)
                if (box.lo[j] > box.hi[j]) fail(b, "box has lo > hi");
            out.merge(RegionSet::box(tag, box));
        } else {
            const YAML::Node b = s["ball"];
            allow_keys(b, {"tag", "center", "radius"}, "ball");
            int tag = tag_of(b);
            ctx.box_of(b, tag);
            double r = number(need(b, "radius", "ball"));
            if (!(r > 0)) fail(b, "ball radius must be positive");
            out.merge(RegionSet::ball(tag, numbers(need(b, "center", "ball"), ctx.dim), r));
        }
    }
    return out;
}

}  // namespace

MdpModel parse_model_file(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    allow_keys(root, {"version", "name", "state", "actions", "kernels", "target", "sink", "lipschitz", "partition",
                      "initial", "path_length_hint", "note"},
               "model");
    if (root["version"]) {
        std::string v = root["version"].Scalar();
        if (std::atoi(v.c_str()) > kCurrentVersion.major) fail(root["version"], "unsupported model format version " + v);
    }
    MdpModel m;
    m.name = need(root, "name", "model").Scalar();
    m.descriptor = text;

    ModelContext ctx;
    const YAML::Node state = need(root, "state", "model");
    if (!state.IsSequence() || state.size() == 0) fail(state, "state must be a non-empty list of components");
    std::set<int> tags;
    for (const auto& c : state) {
        allow_keys(c, {"tag", "lo", "hi"}, "state component");
        int tag = tag_of(c);
        if (!tags.insert(tag).second) fail(c, "duplicate component tag " + std::to_string(tag));
        auto lo = numbers(need(c, "lo", "state component"), std::size_t(-1));
        auto hi = numbers(need(c, "hi", "state component"), lo.size());
        if (ctx.components.empty()) ctx.dim = lo.size();
        else if (lo.size() != ctx.dim) fail(c, "all components need the same dimension");
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (lo[j] > hi[j]) fail(c, "component has lo > hi");
        ctx.components.push_back({tag, Box{lo, hi}});
    }
    m.components = ctx.components;

    const YAML::Node actions = need(root, "actions", "model");
    allow_keys(actions, {"names", "box"}, "actions");
    if (actions.size() != 1) fail(actions, "actions has exactly one of names, box");
    std::size_t action_dim = 0;
    std::vector<std::string> keys;
    if (actions["names"]) {
        const YAML::Node names = actions["names"];
        if (!names.IsSequence() || names.size() == 0) fail(names, "names must be a non-empty list");
        std::vector<ActionPoint> pts;
        for (const auto& n : names) {
            std::string s = n.Scalar();
            if (s.empty() || s.find_first_of(",|:; \n") != std::string::npos) fail(n, "bad action name '" + s + "'");
            if (std::find(m.action_names.begin(), m.action_names.end(), s) != m.action_names.end())
                fail(n, "duplicate action '" + s + "'");
            pts.push_back(ActionPoint{{}, static_cast<int>(m.action_names.size())});
            m.action_names.push_back(s);
        }
        ActionSet set = ActionSet::finite(pts);
        m.actions = [set](const StatePoint&) { return set; };
        m.uniform_actions = true;
        keys = m.action_names;
    } else {
        const YAML::Node b = actions["box"];
        allow_keys(b, {"lo", "hi", "tag"}, "action box");
        auto lo = numbers(need(b, "lo", "action box"), std::size_t(-1));
        auto hi = numbers(need(b, "hi", "action box"), lo.size());
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (lo[j] > hi[j]) fail(b, "action box has lo > hi");
        action_dim = lo.size();
        ActionSet set = ActionSet::box(Box{lo, hi}, tag_of(b));
        m.actions = [set](const StatePoint&) { return set; };
        keys = {"any"};
    }
    for (std::size_t j = 0; j < ctx.dim; ++j) ctx.vars.push_back("s" + std::to_string(j));
    for (std::size_t j = 0; j < action_dim; ++j) ctx.vars.push_back("a" + std::to_string(j));

    const YAML::Node kernels = need(root, "kernels", "model");
    if (!kernels.IsMap()) fail(kernels, "kernels must map action names to kernels");
    std::vector<std::shared_ptr<KernelSpec>> specs(keys.size());
    for (auto it = kernels.begin(); it != kernels.end(); ++it) {
        std::string k = it->first.as<std::string>();
        auto pos = std::find(keys.begin(), keys.end(), k);
        if (pos == keys.end()) fail(it->first, "kernel for unknown action '" + k + "'");
        specs[static_cast<std::size_t>(pos - keys.begin())] = parse_kernel(it->second, ctx);
    }
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (!specs[i]) fail(kernels, "no kernel for action '" + keys[i] + "'");
    const bool finite_actions = action_dim == 0 && actions["names"];
    auto components = ctx.components;
    m.kernel = [specs, components, finite_actions](const StatePoint& s, const ActionPoint& a) {
        std::vector<double> v = s.coords;
        v.insert(v.end(), a.coords.begin(), a.coords.end());
        const KernelSpec& k = finite_actions ? *specs.at(static_cast<std::size_t>(a.tag)) : *specs[0];
        return build_kernel(k, v, components);
    };

    if (root["target"]) m.target = parse_shapes(root["target"], ctx, "target");
    if (root["sink"]) m.sink = parse_shapes(root["sink"], ctx, "sink");

    const YAML::Node lip = need(root, "lipschitz", "model");
    allow_keys(lip, {"state", "pair"}, "lipschitz");
    m.lipschitz_state = number(need(lip, "state", "lipschitz"));
    m.lipschitz_pair = number(need(lip, "pair", "lipschitz"));
    if (m.lipschitz_state < 0 || m.lipschitz_pair < 0) fail(lip, "Lipschitz constants must be non-negative");

    if (root["partition"]) {
        const YAML::Node parts = root["partition"];
        if (!parts.IsSequence()) fail(parts, "partition must be a list of regions");
        Partition p;
        for (const auto& r : parts) {
            allow_keys(r, {"name", "shapes", "lipschitz"}, "partition region");
            double c = number(need(r, "lipschitz", "partition region"));
            if (c < 0) fail(r, "negative Lipschitz constant");
            p.regions.push_back({need(r, "name", "partition region").Scalar(),
                                 parse_shapes(need(r, "shapes", "partition region"), ctx, "shapes"), c});
        }
        m.partition = std::move(p);
    }

    const YAML::Node init = need(root, "initial", "model");
    allow_keys(init, {"tag", "at"}, "initial");
    int itag = tag_of(init);
    ctx.box_of(init, itag);
    m.initial = StatePoint{numbers(need(init, "at", "initial"), ctx.dim), itag};
    if (!m.in_space(m.initial)) fail(init, "initial state lies outside its component");

    if (root["path_length_hint"]) m.path_length_hint = static_cast<std::size_t>(std::max(0, integer(root["path_length_hint"])));
    if (root["note"]) m.constants_note = root["note"].Scalar();
    return m;
}

MdpModel resolve_model(const std::string& ref, const models::CatalogOptions& options) {
    auto ends_with = [&](const std::string& suffix) {
        return ref.size() >= suffix.size() && ref.compare(ref.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    const std::string finite_prefix = "finite-from-file:", file_prefix = "model-file:";
    if (ref.rfind(finite_prefix, 0) == 0)
        return models::finite(parse_finite(read_file(ref.substr(finite_prefix.size()))), "finite-from-file");
    if (ref.rfind(file_prefix, 0) == 0) return parse_model_file(read_file(ref.substr(file_prefix.size())));
    if (ends_with(".mdp")) return models::finite(parse_finite(read_file(ref)), "finite-from-file");
    if (ends_with(".yaml") || ends_with(".yml")) return parse_model_file(read_file(ref));
    return models::catalog(ref, options);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw UsageError("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, target);
}

std::vector<std::pair<std::string, std::string>> config_meta(const SolverConfig& c) {
    const SamplerConfig& s = c.sampler;
    return {{"mode", to_string(c.mode)},
            {"epsilon", dec(c.epsilon)},
            {"xi", dec(c.xi)},
            {"horizon", std::to_string(c.horizon)},
            {"precision_floor", dec(c.precision_floor)},
            {"sampler", to_string(s.kind)},
            {"safe_sampler", to_string(s.safe)},
            {"nu", dec(s.nu)},
            {"guidance_fraction", dec(s.guidance_fraction)},
            {"guidance_floor", dec(s.guidance_floor)},
            {"max_path_len", std::to_string(s.max_path_len)},
            {"grid_start_level", std::to_string(s.grid_start_level)},
            {"seed", std::to_string(c.seed)},
            {"max_steps", std::to_string(c.max_steps)},
            {"max_seconds", dec(c.max_seconds)},
            {"probe_every", std::to_string(c.probe_every)},
            {"trace_every", std::to_string(c.trace_every)},
            {"stagnation_window", std::to_string(c.stagnation_window)},
            {"approx_budget", std::to_string(c.approx_budget)},
            {"use_grid", c.use_grid ? "true" : "false"},
            {"grid_max_cells", std::to_string(c.grid_max_cells)}};
}

}  // namespace lipreach::io
