#ifndef CBANDIT_TEXT_IO_HPP
#define CBANDIT_TEXT_IO_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "graph.hpp"
#include "scm.hpp"

namespace cbandit {

// Graph text format, one declaration per line, '#' starts a comment:
//   node <name> <domain_size>
//   reward <name>
//   edge <tail> <head>
//   bidirected <a> <b>
struct GraphFile {
    Admg graph;
    std::vector<int> domain;
};

GraphFile parse_graph_text(std::istream& in);
GraphFile load_graph_file(const std::string& path);
void write_graph_text(std::ostream& out, const Admg& g, const std::vector<int>& domain);
void save_graph_file(const std::string& path, const Admg& g, const std::vector<int>& domain);

// SCM file format: the graph format plus
//   noise <node> <p0> <p1> ...
//   confounder <a> <b> <p0> <p1> ...
//   mech <node> <input values in canonical order> <output>
// Probabilities are printed with enough digits to round-trip exactly.
ScmSpec parse_scm_text(std::istream& in);
Scm load_scm_file(const std::string& path);
void write_scm_text(std::ostream& out, const ScmSpec& spec);
void save_scm_file(const std::string& path, const Scm& scm);

// key=value configuration text; '#' comments, blank lines ignored.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config_text(std::istream& in);
ConfigMap load_config_file(const std::string& path);

// Minimal CSV emitter: quoting is never needed for the values written here.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void header(const std::vector<std::string>& cols);
    void field(const std::string& s);
    void field(long long v);
    void field(int v) { field(static_cast<long long>(v)); }
    void field(double v);
    void end_row();

private:
    std::ostream& out_;
    bool row_started_ = false;
};

std::string format_double(double v); // shortest round-trip form

} // namespace cbandit

#endif
