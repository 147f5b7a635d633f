#include "geomflow/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>

namespace geomflow {

const char* to_string(OutputFormat f)
{
    switch (f) {
    case OutputFormat::obj: return "obj";
    case OutputFormat::vtk: return "vtk";
    case OutputFormat::csv: return "csv";
    }
    return "?";
}

ConfigError::ConfigError(const std::string& what, int line, std::string key)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
    , m_line(line)
    , m_key(std::move(key))
{}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

// ---- config values -------------------------------------------------------

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, double, bool, Array> data;
    int line = 0;
};

class ValueParser {
public:
    ValueParser(const std::string& text, int line)
        : m_text(text)
        , m_line(line)
    {}

    Value parse()
    {
        Value v = value();
        skip_space();
        if (m_pos != m_text.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, m_line); }

    void skip_space()
    {
        while (m_pos < m_text.size() && std::isspace(static_cast<unsigned char>(m_text[m_pos]))) ++m_pos;
    }

    Value value()
    {
        skip_space();
        if (m_pos >= m_text.size()) fail("missing value");
        const char ch = m_text[m_pos];
        Value v;
        v.line = m_line;
        if (ch == '"') {
            ++m_pos;
            std::string s;
            while (m_pos < m_text.size() && m_text[m_pos] != '"') {
                if (m_text[m_pos] == '\\' && m_pos + 1 < m_text.size()) ++m_pos;
                s += m_text[m_pos++];
            }
            if (m_pos >= m_text.size()) fail("unterminated string");
            ++m_pos;
            v.data = s;
        } else if (ch == '[') {
            ++m_pos;
            Array items;
            skip_space();
            if (m_pos < m_text.size() && m_text[m_pos] == ']') {
                ++m_pos;
            } else {
                for (;;) {
                    items.push_back(value());
                    skip_space();
                    if (m_pos >= m_text.size()) fail("unterminated array");
                    if (m_text[m_pos] == ',') {
                        ++m_pos;
                        skip_space();
                        if (m_pos < m_text.size() && m_text[m_pos] == ']') {
                            ++m_pos;
                            break;
                        }
                        continue;
                    }
                    if (m_text[m_pos] == ']') {
                        ++m_pos;
                        break;
                    }
                    fail("expected ',' or ']' in array");
                }
            }
            v.data = std::move(items);
        } else {
            const std::size_t start = m_pos;
            while (m_pos < m_text.size() && m_text[m_pos] != ',' && m_text[m_pos] != ']' &&
                   !std::isspace(static_cast<unsigned char>(m_text[m_pos]))) {
                ++m_pos;
            }
            const std::string word = m_text.substr(start, m_pos - start);
            if (word == "true" || word == "false") {
                v.data = word == "true";
            } else {
                std::string cleaned;
                for (char c : word) {
                    if (c != '_') cleaned += c;
                }
                std::size_t used = 0;
                double number = 0.0;
                try {
                    number = std::stod(cleaned, &used);
                } catch (const std::exception&) {
                    fail("cannot parse value '" + word + "'");
                }
                if (used != cleaned.size()) fail("cannot parse value '" + word + "'");
                v.data = number;
            }
        }
        return v;
    }

    const std::string& m_text;
    int m_line;
    std::size_t m_pos = 0;
};

std::string strip_comment(const std::string& line)
{
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int bracket_balance(const std::string& s)
{
    int depth = 0;
    bool in_string = false;
    for (char c : s) {
        if (c == '"') in_string = !in_string;
        if (in_string) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

using Table = std::map<std::string, Value>;

Table parse_table(const std::string& text)
{
    Table table;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        const std::string key = trim(line.substr(0, eq));
        std::string rhs = trim(line.substr(eq + 1));
        const int start_line = line_no;
        while (bracket_balance(rhs) > 0 && std::getline(in, raw)) {
            ++line_no;
            rhs += " " + trim(strip_comment(raw));
        }
        if (key.empty()) throw ConfigError("empty key", start_line);
        const std::string full = section.empty() ? key : section + "." + key;
        if (table.count(full)) throw ConfigError("duplicate key", start_line, full);
        table[full] = ValueParser(rhs, start_line).parse();
    }
    return table;
}

// ---- typed access ----------------------------------------------------------

class Reader {
public:
    explicit Reader(Table table)
        : m_table(std::move(table))
    {}

    bool has(const std::string& key) const { return m_table.count(key) != 0; }

    const Value* find(const std::string& key)
    {
        const auto it = m_table.find(key);
        if (it == m_table.end()) return nullptr;
        m_used.insert(key);
        return &it->second;
    }

    static double number(const Value& v, const std::string& key)
    {
        if (const auto* d = std::get_if<double>(&v.data)) return *d;
        throw ConfigError("expected a number", v.line, key);
    }

    static int integer(const Value& v, const std::string& key)
    {
        const double d = number(v, key);
        if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError("expected an integer", v.line, key);
        return static_cast<int>(d);
    }

    static std::string string(const Value& v, const std::string& key)
    {
        if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
        throw ConfigError("expected a string", v.line, key);
    }

    static bool boolean(const Value& v, const std::string& key)
    {
        if (const auto* b = std::get_if<bool>(&v.data)) return *b;
        throw ConfigError("expected true or false", v.line, key);
    }

    static const Array& array(const Value& v, const std::string& key)
    {
        if (const auto* a = std::get_if<Array>(&v.data)) return *a;
        throw ConfigError("expected an array", v.line, key);
    }

    template <class T, class F>
    void get(const std::string& key, T& out, F convert)
    {
        if (const Value* v = find(key)) {
            try {
                out = convert(*v, key);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(e.what(), v->line, key);
            }
        }
    }

    void reject_unknown() const
    {
        for (const auto& [key, value] : m_table) {
            if (!m_used.count(key)) throw ConfigError("unknown key '" + key + "'", value.line, key);
        }
    }

private:
    Table m_table;
    std::set<std::string> m_used;
};

template <class E>
E pick(const std::string& s, std::initializer_list<E> options, const std::string& what)
{
    for (E e : options) {
        if (s == to_string(e)) return e;
    }
    throw std::invalid_argument("unknown " + what + " '" + s + "'");
}

RunConfig from_table(Table table)
{
    Reader r(std::move(table));
    RunConfig cfg;
    SchemeConfig& sc = cfg.scheme;
    const auto num = &Reader::number;
    const auto str = &Reader::string;

    // [run]
    r.get("run.t_end", cfg.t_end, num);
    if (r.has("run.max_steps")) {
        int steps = 0;
        r.get("run.max_steps", steps, &Reader::integer);
        cfg.max_steps = steps;
    }
    r.get("run.output_dir", cfg.output_dir, str);
    r.get("run.frame_every", cfg.frame_every, &Reader::integer);
    r.get("run.quality_floor", cfg.quality_floor, num);
    r.get("run.mesh", cfg.mesh_path, str);
    r.get("run.mesh_boundary", cfg.mesh_boundary, [](const Value& v, const std::string& key) {
        const std::string s = Reader::string(v, key);
        if (s == "closed") return BoundaryKind::closed;
        if (s == "substrate") return BoundaryKind::open_substrate;
        if (s == "vertical_lines") return BoundaryKind::open_vertical_lines;
        throw std::invalid_argument("mesh_boundary must be closed, substrate or vertical_lines");
    });
    r.get("run.walls", cfg.walls, [](const Value& v, const std::string& key) {
        const Array& a = Reader::array(v, key);
        if (a.size() != 2) throw std::invalid_argument("walls needs two numbers");
        return VerticalWalls{Reader::number(a[0], key), Reader::number(a[1], key)};
    });
    r.get("run.formats", cfg.formats, [](const Value& v, const std::string& key) {
        std::set<OutputFormat> out;
        for (const Value& item : Reader::array(v, key)) {
            out.insert(pick(Reader::string(item, key), {OutputFormat::obj, OutputFormat::vtk, OutputFormat::csv}, "format"));
        }
        return out;
    });

    // [scheme]
    r.get("scheme.flow", sc.flow, [](const Value& v, const std::string& k) {
        return pick(Reader::string(v, k), {Flow::mcf, Flow::sd}, "flow");
    });
    r.get("scheme.geometry", sc.geometry, [](const Value& v, const std::string& k) {
        return pick(Reader::string(v, k), {Geometry::closed, Geometry::open2d, Geometry::open3d}, "geometry");
    });
    r.get("scheme.method", sc.method, [](const Value& v, const std::string& k) {
        return pick(Reader::string(v, k), {Method::bgn_mdr, Method::bgn}, "method");
    });
    r.get("scheme.conormal_mode", sc.conormal_mode, [](const Value& v, const std::string& k) {
        return pick(Reader::string(v, k), {ConormalMode::semi_implicit, ConormalMode::lagged}, "conormal_mode");
    });
    r.get("scheme.formulation", sc.formulation, [](const Value& v, const std::string& k) {
        return pick(Reader::string(v, k), {Formulation::monolithic, Formulation::reduced}, "formulation");
    });
    r.get("scheme.alpha", sc.alpha, num);
    r.get("scheme.t_degenerate_eps", sc.t_degenerate_eps, num);
    const bool has_sigma = r.has("scheme.sigma");
    r.get("scheme.sigma", sc.sigma, num);
    if (const Value* v = r.find("scheme.theta_deg")) {
        const double theta = Reader::number(*v, "scheme.theta_deg");
        const double sigma = std::cos(theta * std::numbers::pi / 180.0);
        if (has_sigma && std::abs(sigma - sc.sigma) > 1e-12) {
            throw ConfigError("sigma and theta_deg disagree", v->line, "scheme.theta_deg");
        }
        sc.sigma = sigma;
    }
    if (r.has("scheme.tau") && r.has("scheme.tau_schedule")) {
        throw ConfigError("give either tau or tau_schedule", 0, "scheme.tau");
    }
    if (const Value* v = r.find("scheme.tau")) sc.tau_schedule = {{0.0, Reader::number(*v, "scheme.tau")}};
    r.get("scheme.tau_schedule", sc.tau_schedule, [](const Value& v, const std::string& key) {
        std::vector<TauSegment> out;
        for (const Value& seg : Reader::array(v, key)) {
            const Array& pair = Reader::array(seg, key);
            if (pair.size() != 2) throw std::invalid_argument("tau_schedule entries are [t_switch, tau]");
            out.push_back({Reader::number(pair[0], key), Reader::number(pair[1], key)});
        }
        if (out.empty() || out.front().t_switch != 0.0) {
            throw std::invalid_argument("tau_schedule must start at t = 0");
        }
        return out;
    });
    if (const Value* v = r.find("scheme.compensation_t_activate")) {
        sc.compensation = Compensation{Reader::number(*v, "scheme.compensation_t_activate")};
    }

    // [solver]
    r.get("solver.method", sc.solver.method, [](const Value& v, const std::string& k) {
        const std::string s = Reader::string(v, k);
        if (s == "direct_lu") return SolveMethod::direct_lu;
        if (s == "gmres") return SolveMethod::gmres;
        throw std::invalid_argument("solver method must be direct_lu or gmres");
    });
    r.get("solver.tol", sc.solver.tol, num);
    r.get("solver.pivot_threshold", sc.solver.pivot_threshold, num);
    r.get("solver.gmres_restart", sc.solver.gmres_restart, &Reader::integer);
    r.get("solver.max_iterations", sc.solver.max_iterations, &Reader::integer);

    // [shape]
    if (const Value* v = r.find("shape.kind")) {
        ShapeSpec s;
        try {
            s.kind = shape_kind_from_string(Reader::string(*v, "shape.kind"));
        } catch (const InvalidShape& e) {
            throw ConfigError(e.what(), v->line, "shape.kind");
        }
        r.get("shape.radius", s.radius, num);
        r.get("shape.nodes", s.nodes, &Reader::integer);
        r.get("shape.level", s.level, &Reader::integer);
        r.get("shape.triangles", s.triangles, &Reader::integer);
        r.get("shape.h", s.h, num);
        r.get("shape.open", s.open, &Reader::boolean);
        r.get("shape.noise", s.noise, num);
        r.get("shape.half_width", s.half_width, num);
        r.get("shape.seed", s.seed, [](const Value& val, const std::string& k) {
            const int seed = Reader::integer(val, k);
            if (seed < 0) throw std::invalid_argument("seed must be nonnegative");
            return static_cast<std::uint64_t>(seed);
        });
        r.get("shape.profile", s.profile, [](const Value& val, const std::string& k) {
            return profile_from_string(Reader::string(val, k));
        });
        r.get("shape.dims", s.dims, [](const Value& val, const std::string& k) {
            const Array& a = Reader::array(val, k);
            if (a.size() != 3) throw std::invalid_argument("dims needs three numbers");
            return Vec3(Reader::number(a[0], k), Reader::number(a[1], k), Reader::number(a[2], k));
        });
        cfg.shape = s;
    }

    // [reference]
    if (const Value* v = r.find("reference.kind")) {
        ExactReference ref;
        try {
            ref.kind = reference_kind_from_string(Reader::string(*v, "reference.kind"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), v->line, "reference.kind");
        }
        r.get("reference.radius", ref.radius, num);
        cfg.reference = ref;
    }

    r.reject_unknown();
    cfg.validate();
    return cfg;
}

} // namespace

void RunConfig::validate() const
{
    try {
        scheme.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive", 0, "run.t_end");
    if (frame_every < 1) throw ConfigError("frame_every must be at least 1", 0, "run.frame_every");
    if (max_steps && *max_steps < 1) throw ConfigError("max_steps must be at least 1", 0, "run.max_steps");
    if (shape.has_value() == !mesh_path.empty()) {
        throw ConfigError("give exactly one of [shape] kind or run.mesh");
    }
    if (reference && !(reference->radius > 0.0)) throw ConfigError("reference radius must be positive", 0, "reference.radius");
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides)
{
    Table table = parse_table(text);
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
        std::string key = trim(o.substr(0, eq));
        if (key.find('.') == std::string::npos) {
            // Bare keys address the scheme section.
            key = "scheme." + key;
        }
        std::string rhs = trim(o.substr(eq + 1));
        Value v;
        try {
            v = ValueParser(rhs, 0).parse();
        } catch (const ConfigError&) {
            // Unquoted words are taken as strings on the command line.
            v.data = rhs;
        }
        table[key] = v;
    }
    return from_table(std::move(table));
}

RunConfig read_config(const std::string& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

Mesh initial_mesh(const RunConfig& config)
{
    if (config.shape) return generate(*config.shape);
    return read_mesh(config.mesh_path, config.mesh_boundary, config.walls);
}

// ---- mesh files -------------------------------------------------------------

MeshFormat mesh_format_from_path(const std::string& path)
{
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".obj") return MeshFormat::obj;
    if (ext == ".off") return MeshFormat::off;
    if (ext == ".vtk") return MeshFormat::vtk;
    throw std::invalid_argument("unknown mesh file extension '" + ext + "'");
}

namespace {

std::ofstream open_out(const std::string& path)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

void check_written(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string xyz(const Vec3& p) { return format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z()); }

} // namespace

void write_mesh(const Mesh& mesh, const std::string& path, MeshFormat format, const MeshFields& fields)
{
    std::ofstream out = open_out(path);
    const int d = mesh.dim();
    switch (format) {
    case MeshFormat::obj:
        for (const Vec3& p : mesh.vertices()) out << "v " << xyz(p) << '\n';
        for (const Element& e : mesh.elements()) {
            out << (d == 2 ? "l" : "f");
            for (int k = 0; k < d; ++k) out << ' ' << e[static_cast<std::size_t>(k)] + 1;
            out << '\n';
        }
        break;
    case MeshFormat::off:
        out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_elements() << " 0\n";
        for (const Vec3& p : mesh.vertices()) out << xyz(p) << '\n';
        for (const Element& e : mesh.elements()) {
            out << d;
            for (int k = 0; k < d; ++k) out << ' ' << e[static_cast<std::size_t>(k)];
            out << '\n';
        }
        break;
    case MeshFormat::vtk: {
        const std::size_t J = mesh.num_vertices();
        out << "# vtk DataFile Version 3.0\ngeomflow\nASCII\nDATASET POLYDATA\n";
        out << "POINTS " << J << " double\n";
        for (const Vec3& p : mesh.vertices()) out << xyz(p) << '\n';
        out << (d == 2 ? "LINES " : "POLYGONS ") << mesh.num_elements() << ' ' << mesh.num_elements() * (d + 1) << '\n';
        for (const Element& e : mesh.elements()) {
            out << d;
            for (int k = 0; k < d; ++k) out << ' ' << e[static_cast<std::size_t>(k)];
            out << '\n';
        }
        if (fields.lambda || fields.v || fields.T) {
            out << "POINT_DATA " << J << '\n';
            if (fields.lambda) {
                out << "SCALARS lambda double 1\nLOOKUP_TABLE default\n";
                for (Eigen::Index j = 0; j < fields.lambda->size(); ++j) out << format_double((*fields.lambda)(j)) << '\n';
            }
            if (fields.v) {
                out << "VECTORS v double\n";
                for (Eigen::Index j = 0; j < fields.v->rows(); ++j) {
                    Vec3 p = Vec3::Zero();
                    for (int k = 0; k < fields.v->cols(); ++k) p[k] = (*fields.v)(j, k);
                    out << xyz(p) << '\n';
                }
            }
            if (fields.T) {
                out << "VECTORS T double\n";
                for (const Vec3& t : *fields.T) out << xyz(t) << '\n';
            }
        }
        break;
    }
    }
    check_written(out, path);
}

Mesh read_mesh(const std::string& path, BoundaryKind kind, VerticalWalls walls)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
    std::vector<Vec3> verts;
    std::vector<Element> elems;
    int dim = 0;
    const MeshFormat format = mesh_format_from_path(path);
    auto set_dim = [&](int d) {
        if (dim != 0 && dim != d) throw std::runtime_error("mesh file mixes line and face records");
        dim = d;
    };
    if (format == MeshFormat::obj) {
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "v") {
                Vec3 p;
                ls >> p.x() >> p.y() >> p.z();
                if (!ls) throw std::runtime_error("malformed vertex record in '" + path + "'");
                verts.push_back(p);
            } else if (tag == "l" || tag == "f") {
                const int d = tag == "l" ? 2 : 3;
                set_dim(d);
                Element e{-1, -1, -1};
                for (int k = 0; k < d; ++k) {
                    std::string tok;
                    ls >> tok;
                    if (!ls) throw std::runtime_error("malformed element record in '" + path + "'");
                    e[static_cast<std::size_t>(k)] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
                }
                elems.push_back(e);
            }
        }
    } else if (format == MeshFormat::off) {
        std::string header;
        std::size_t nv = 0, nf = 0, ne = 0;
        in >> header >> nv >> nf >> ne;
        if (header != "OFF" || !in) throw std::runtime_error("malformed OFF header in '" + path + "'");
        verts.resize(nv);
        for (auto& p : verts) in >> p.x() >> p.y() >> p.z();
        for (std::size_t f = 0; f < nf; ++f) {
            int d = 0;
            in >> d;
            if (d != 2 && d != 3) throw std::runtime_error("OFF elements must have 2 or 3 vertices");
            set_dim(d);
            Element e{-1, -1, -1};
            for (int k = 0; k < d; ++k) in >> e[static_cast<std::size_t>(k)];
            elems.push_back(e);
        }
        if (!in) throw std::runtime_error("truncated OFF file '" + path + "'");
    } else {
        throw std::runtime_error("reading VTK meshes is not supported");
    }
    if (dim == 0) throw std::runtime_error("mesh file '" + path + "' has no elements");
    return build_mesh(dim, std::move(verts), std::move(elems), kind, walls);
}

// ---- series -------------------------------------------------------------------

namespace {

std::string cell(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

} // namespace

std::string format_series(const std::vector<DiagnosticsRecord>& records)
{
    std::string out = series_header;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.step);
        for (double x : {r.t, r.area}) out += "," + cell(x);
        out += "," + (r.substrate_area ? cell(*r.substrate_area) : std::string());
        for (double x : {r.energy, r.T_norm, r.c, r.lambda_min, r.lambda_max, r.quality.max_edge, r.quality.min_edge,
                         r.quality.edge_ratio}) {
            out += "," + cell(x);
        }
        out += '\n';
    }
    return out;
}

void write_series(const std::vector<DiagnosticsRecord>& records, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << format_series(records);
    check_written(out, path);
}

void write_convergence(const ConvergenceTable& table, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "parameter,error,eoc\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out << format_double(table.rows[i].parameter) << ',' << format_double(table.rows[i].error) << ',';
        if (i > 0) out << format_double(table.pairwise_eoc[i - 1]);
        out << '\n';
    }
    out << "# fitted_order," << format_double(table.fitted_order) << '\n';
    check_written(out, path);
}

} // namespace geomflow
