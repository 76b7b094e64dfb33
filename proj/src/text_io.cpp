#include "text_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace cbandit {

namespace {

std::vector<std::vector<std::string>> tokenized_lines(std::istream& in) {
    std::vector<std::vector<std::string>> lines;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::stringstream ss(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
        if (!tokens.empty()) lines.push_back(std::move(tokens));
    }
    return lines;
}

int parse_int(const std::string& s, const char* what) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("expected an integer for ") + what + ", got '" + s + "'");
    }
}

double parse_double(const std::string& s, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("expected a number for ") + what + ", got '" + s + "'");
    }
}

struct ParsedDecls {
    std::vector<std::string> names;
    std::vector<int> domain;
    std::string reward_name;
    std::vector<std::vector<std::string>> edges, bidirected, noise, confounder, mech;
};

ParsedDecls split_declarations(std::istream& in) {
    ParsedDecls d;
    for (auto& tokens : tokenized_lines(in)) {
        const std::string& kind = tokens[0];
        if (kind == "node") {
            if (tokens.size() != 3) throw IoError("node line needs: node <name> <domain_size>");
            d.names.push_back(tokens[1]);
            d.domain.push_back(parse_int(tokens[2], "domain size"));
        } else if (kind == "reward") {
            if (tokens.size() != 2) throw IoError("reward line needs: reward <name>");
            d.reward_name = tokens[1];
        } else if (kind == "edge") {
            if (tokens.size() != 3) throw IoError("edge line needs: edge <tail> <head>");
            d.edges.push_back(tokens);
        } else if (kind == "bidirected") {
            if (tokens.size() != 3) throw IoError("bidirected line needs: bidirected <a> <b>");
            d.bidirected.push_back(tokens);
        } else if (kind == "noise") {
            d.noise.push_back(tokens);
        } else if (kind == "confounder") {
            d.confounder.push_back(tokens);
        } else if (kind == "mech") {
            d.mech.push_back(tokens);
        } else {
            throw IoError("unknown declaration '" + kind + "'");
        }
    }
    if (d.names.empty()) throw IoError("no node declarations");
    if (d.reward_name.empty()) throw IoError("no reward declaration");
    return d;
}

GraphFile build_graph(const ParsedDecls& d) {
    VarId reward = -1;
    for (size_t i = 0; i < d.names.size(); ++i) {
        if (d.names[i] == d.reward_name) reward = static_cast<VarId>(i);
    }
    if (reward < 0) throw IoError("reward '" + d.reward_name + "' is not a declared node");
    GraphFile gf{Admg(d.names, reward), d.domain};
    for (const auto& t : d.edges) gf.graph.add_edge(gf.graph.id_of(t[1]), gf.graph.id_of(t[2]));
    for (const auto& t : d.bidirected) {
        gf.graph.add_bidirected(gf.graph.id_of(t[1]), gf.graph.id_of(t[2]));
    }
    return gf;
}

} // namespace

GraphFile parse_graph_text(std::istream& in) {
    ParsedDecls d = split_declarations(in);
    if (!d.noise.empty() || !d.confounder.empty() || !d.mech.empty()) {
        throw IoError("SCM declarations found; use the SCM loader");
    }
    return build_graph(d);
}

GraphFile load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_graph_text(in);
}

void write_graph_text(std::ostream& out, const Admg& g, const std::vector<int>& domain) {
    for (int v = 0; v < g.size(); ++v) {
        out << "node " << g.name(v) << " " << (v < static_cast<int>(domain.size()) ? domain[v] : 2)
            << "\n";
    }
    out << "reward " << g.name(g.reward()) << "\n";
    for (auto [t, h] : g.directed_edges()) out << "edge " << g.name(t) << " " << g.name(h) << "\n";
    for (auto [a, b] : g.bidirected_edges()) {
        out << "bidirected " << g.name(a) << " " << g.name(b) << "\n";
    }
}

void save_graph_file(const std::string& path, const Admg& g, const std::vector<int>& domain) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_graph_text(out, g, domain);
}

ScmSpec parse_scm_text(std::istream& in) {
    ParsedDecls d = split_declarations(in);
    GraphFile gf = build_graph(d);
    const Admg& g = gf.graph;
    const int n = g.size();

    ScmSpec spec{g, gf.domain, std::vector<std::vector<double>>(n), {}, std::vector<MechanismSpec>(n)};
    for (const auto& t : d.noise) {
        VarId v = g.id_of(t[1]);
        std::vector<double> dist;
        for (size_t i = 2; i < t.size(); ++i) dist.push_back(parse_double(t[i], "noise probability"));
        spec.noise[v] = std::move(dist);
    }
    for (const auto& t : d.confounder) {
        if (t.size() < 5) throw IoError("confounder line needs two nodes and a distribution");
        VarId a = g.id_of(t[1]);
        VarId b = g.id_of(t[2]);
        if (a > b) std::swap(a, b);
        ConfounderSpec c{a, b, {}};
        for (size_t i = 3; i < t.size(); ++i) c.dist.push_back(parse_double(t[i], "confounder probability"));
        spec.confounders.push_back(std::move(c));
    }
    std::sort(spec.confounders.begin(), spec.confounders.end(),
              [](const ConfounderSpec& x, const ConfounderSpec& y) {
                  return std::pair(x.a, x.b) < std::pair(y.a, y.b);
              });

    // mech rows: the row's position in the table follows from its input values
    std::vector<std::vector<int>> dims(n);
    for (int v = 0; v < n; ++v) {
        for (VarId p : g.parents_mask(v).to_vector()) dims[v].push_back(spec.domain[p]);
        dims[v].push_back(static_cast<int>(spec.noise[v].size()));
        for (const auto& c : spec.confounders) {
            if (c.a == v || c.b == v) dims[v].push_back(static_cast<int>(c.dist.size()));
        }
        size_t rows = 1;
        for (int dim : dims[v]) rows *= dim;
        spec.mech[v].table.assign(rows, -1);
    }
    for (const auto& t : d.mech) {
        VarId v = g.id_of(t[1]);
        if (t.size() != dims[v].size() + 3) {
            throw IoError("mech line for " + g.name(v) + " needs " + std::to_string(dims[v].size()) +
                          " input values and one output");
        }
        size_t idx = 0;
        for (size_t i = 0; i < dims[v].size(); ++i) {
            int val = parse_int(t[2 + i], "mechanism input");
            if (val < 0 || val >= dims[v][i]) throw IoError("mechanism input out of range in mech line");
            idx = idx * dims[v][i] + val;
        }
        spec.mech[v].table[idx] = parse_int(t.back(), "mechanism output");
    }
    for (int v = 0; v < n; ++v) {
        for (int cell : spec.mech[v].table) {
            if (cell < 0) throw IoError("mechanism table of " + g.name(v) + " is missing rows");
        }
    }
    return spec;
}

Scm load_scm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return Scm(parse_scm_text(in));
}

void write_scm_text(std::ostream& out, const ScmSpec& spec) {
    const Admg& g = spec.graph;
    write_graph_text(out, g, spec.domain);
    for (int v = 0; v < g.size(); ++v) {
        out << "noise " << g.name(v);
        for (double p : spec.noise[v]) out << " " << format_double(p);
        out << "\n";
    }
    for (const auto& c : spec.confounders) {
        out << "confounder " << g.name(c.a) << " " << g.name(c.b);
        for (double p : c.dist) out << " " << format_double(p);
        out << "\n";
    }
    for (int v = 0; v < g.size(); ++v) {
        std::vector<int> dims;
        for (VarId p : g.parents_mask(v).to_vector()) dims.push_back(spec.domain[p]);
        dims.push_back(static_cast<int>(spec.noise[v].size()));
        for (const auto& c : spec.confounders) {
            if (c.a == v || c.b == v) dims.push_back(static_cast<int>(c.dist.size()));
        }
        std::vector<int> vals(dims.size(), 0);
        for (size_t row = 0; row < spec.mech[v].table.size(); ++row) {
            out << "mech " << g.name(v);
            for (int val : vals) out << " " << val;
            out << " " << spec.mech[v].table[row] << "\n";
            for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
                if (++vals[i] < dims[i]) break;
                vals[i] = 0;
            }
        }
    }
}

void save_scm_file(const std::string& path, const Scm& scm) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_scm_text(out, scm.spec());
}

ConfigMap parse_config_text(std::istream& in) {
    ConfigMap out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            // a bare word on its own line is a config error, whitespace is not
            std::stringstream ss(line);
            std::string leftover;
            if (ss >> leftover) throw IoError("config line without '=': '" + leftover + "'");
            continue;
        }
        auto trim = [](std::string s) {
            size_t b = s.find_first_not_of(" \t\r");
            size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw IoError("config line with empty key");
        out[key] = value;
    }
    return out;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_config_text(in);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
}

void CsvWriter::field(const std::string& s) {
    if (row_started_) out_ << ",";
    out_ << s;
    row_started_ = true;
}

void CsvWriter::field(long long v) { field(std::to_string(v)); }

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::end_row() {
    out_ << "\n";
    row_started_ = false;
}

std::string format_double(double v) {
    // shortest decimal form that parses back to the same double
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

} // namespace cbandit
