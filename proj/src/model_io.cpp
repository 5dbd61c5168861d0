#include "opctl/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace opctl {

std::uint64_t content_hash(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
    auto p = s.find('#');
    return p == std::string::npos ? s : s.substr(0, p);
}

std::vector<std::string> split_tokens(const std::string& s, const char* seps = " \t,") {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::strchr(seps, c)) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Entry {
    std::string key;
    int index = 0;  ///< 0 when the key carries no index
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct Section {
    std::string name;
    int index = 0;
    int line = 0;
    std::vector<Entry> entries;
    mutable bool used = false;
};

struct Doc {
    std::string path;
    std::string raw;
    std::vector<Section> sections;

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ValidationError(path + ":" + std::to_string(line) + ": " + msg);
    }
};

int parse_int_token(const Doc& doc, int line, const std::string& tok, const std::string& what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        doc.fail(line, what + ": expected an integer, got '" + tok + "'");
    }
}

double parse_real_token(const Doc& doc, int line, const std::string& tok, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        doc.fail(line, what + ": expected a number, got '" + tok + "'");
    }
}

Doc parse_document(const std::string& path, const std::string& raw) {
    Doc doc;
    doc.path = path;
    doc.raw = raw;
    std::istringstream in(raw);
    std::string rawline;
    int lineno = 0;
    Section* cur = nullptr;
    while (std::getline(in, rawline)) {
        ++lineno;
        const std::string line = trim(strip_comment(rawline));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') doc.fail(lineno, "unterminated section header");
            auto tokens = split_tokens(line.substr(1, line.size() - 2));
            if (tokens.empty()) doc.fail(lineno, "empty section header");
            Section sec;
            sec.name = tokens[0];
            sec.line = lineno;
            if (tokens.size() == 2)
                sec.index = parse_int_token(doc, lineno, tokens[1], "section index");
            else if (tokens.size() > 2)
                doc.fail(lineno, "section header has too many tokens");
            doc.sections.push_back(std::move(sec));
            cur = &doc.sections.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) doc.fail(lineno, "expected 'key = value'");
        if (!cur) doc.fail(lineno, "key outside any section");
        auto key_tokens = split_tokens(line.substr(0, eq), " \t");
        if (key_tokens.empty()) doc.fail(lineno, "missing key before '='");
        Entry e;
        e.key = key_tokens[0];
        if (key_tokens.size() == 2)
            e.index = parse_int_token(doc, lineno, key_tokens[1], "key index");
        else if (key_tokens.size() > 2)
            doc.fail(lineno, "key '" + e.key + "' has too many tokens");
        e.value = trim(line.substr(eq + 1));
        if (e.value.empty()) doc.fail(lineno, "key '" + e.key + "' has no value");
        e.line = lineno;
        cur->entries.push_back(std::move(e));
    }
    return doc;
}

/// Access helper for one section; tracks which entries were consumed so
/// unknown keys can be rejected afterwards.
class Reader {
public:
    Reader(const Doc& doc, const Section& sec) : doc_(doc), sec_(sec) { sec_.used = true; }

    std::string where(const Entry& e) const {
        return "[" + sec_.name + (sec_.index ? " " + std::to_string(sec_.index) : "") + "] " +
               e.key + (e.index ? " " + std::to_string(e.index) : "");
    }

    const Entry* find(const std::string& key, int index = 0) const {
        const Entry* hit = nullptr;
        for (const auto& e : sec_.entries)
            if (e.key == key && e.index == index) {
                if (hit) doc_.fail(e.line, "duplicate key '" + key + "'");
                hit = &e;
            }
        if (hit) hit->used = true;
        return hit;
    }

    const Entry& require(const std::string& key, int index = 0) const {
        const Entry* e = find(key, index);
        if (!e)
            doc_.fail(sec_.line, "[" + sec_.name +
                                     (sec_.index ? " " + std::to_string(sec_.index) : "") +
                                     "] is missing required key '" + key +
                                     (index ? " " + std::to_string(index) : "") + "'");
        return *e;
    }

    std::vector<const Entry*> all(const std::string& key) const {
        std::vector<const Entry*> out;
        for (const auto& e : sec_.entries)
            if (e.key == key) {
                e.used = true;
                out.push_back(&e);
            }
        return out;
    }

    int integer(const Entry& e) const { return parse_int_token(doc_, e.line, e.value, where(e)); }
    double real(const Entry& e) const { return parse_real_token(doc_, e.line, e.value, where(e)); }

    Eigen::MatrixXd matrix(const Entry& e) const {
        std::string body = e.value;
        if (!body.empty() && body.front() == '[') {
            if (body.back() != ']') doc_.fail(e.line, where(e) + ": unterminated '['");
            body = body.substr(1, body.size() - 2);
        }
        std::vector<std::vector<double>> rows;
        std::stringstream rs(body);
        std::string row;
        while (std::getline(rs, row, ';')) {
            auto toks = split_tokens(row);
            if (toks.empty()) doc_.fail(e.line, where(e) + ": empty matrix row");
            std::vector<double> r;
            for (const auto& t : toks) r.push_back(parse_real_token(doc_, e.line, t, where(e)));
            rows.push_back(std::move(r));
        }
        if (rows.empty()) doc_.fail(e.line, where(e) + ": empty matrix");
        Eigen::MatrixXd m(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                doc_.fail(e.line, where(e) + ": ragged matrix rows");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        return m;
    }

    LogicalMatrix logical(const Entry& e) const {
        try {
            return parse_logical(e.value);
        } catch (const ValidationError& err) {
            doc_.fail(e.line, where(e) + ": " + err.what());
        }
    }

    std::vector<int> index_set(const Entry& e, int universe) const {
        try {
            return parse_index_set(e.value, universe, where(e));
        } catch (const ValidationError& err) {
            doc_.fail(e.line, err.what());
        }
    }

    void finish() const {
        for (const auto& e : sec_.entries)
            if (!e.used) doc_.fail(e.line, "unknown key '" + e.key + "' in section [" + sec_.name +
                                               (sec_.index ? " " + std::to_string(sec_.index) : "") +
                                               "]");
    }

    const Doc& doc() const { return doc_; }
    const Section& section() const { return sec_; }

private:
    const Doc& doc_;
    const Section& sec_;
};

std::vector<std::vector<int>> integer_table(const Reader& r, const Entry& e, int rows, int cols,
                                            int kappa) {
    Eigen::MatrixXd m = r.matrix(e);
    if (m.rows() != rows || m.cols() != cols)
        r.doc().fail(e.line, r.where(e) + ": expected a " + std::to_string(rows) + " x " +
                                 std::to_string(cols) + " table, got " + std::to_string(m.rows()) +
                                 " x " + std::to_string(m.cols()));
    std::vector<std::vector<int>> t(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
        t[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(cols));
        for (int j = 0; j < cols; ++j) {
            const double v = m(i, j);
            if (v != std::floor(v) || v < 0 || v >= kappa)
                r.doc().fail(e.line, r.where(e) + ": coefficient " + std::to_string(v) +
                                         " is not an integer in 0.." + std::to_string(kappa - 1));
            t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<int>(v);
        }
    }
    return t;
}

} // namespace

std::string format_logical(const LogicalMatrix& m) {
    std::ostringstream os;
    os << 'd' << m.rows << '[';
    for (int j = 0; j < m.col_count(); ++j) {
        if (j) os << ' ';
        os << m.at(j + 1);
    }
    os << ']';
    return os.str();
}

LogicalMatrix parse_logical(const std::string& text) {
    const std::string t = trim(text);
    if (t.size() < 4 || (t[0] != 'd' && t[0] != 'D'))
        throw ValidationError("expected delta notation d<rows>[...], got '" + t + "'");
    auto lb = t.find('[');
    if (lb == std::string::npos || t.back() != ']')
        throw ValidationError("expected delta notation d<rows>[...], got '" + t + "'");
    LogicalMatrix m;
    try {
        std::size_t used = 0;
        m.rows = std::stoi(t.substr(1, lb - 1), &used);
        if (used != lb - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ValidationError("bad row count in delta notation: '" + t.substr(1, lb - 1) + "'");
    }
    for (const auto& tok : split_tokens(t.substr(lb + 1, t.size() - lb - 2))) {
        try {
            std::size_t used = 0;
            m.cols.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ValidationError("bad delta entry '" + tok + "'");
        }
    }
    if (m.cols.empty()) throw ValidationError("empty delta bracket: '" + t + "'");
    m.check("delta notation");
    return m;
}

std::vector<int> parse_index_set(const std::string& text, int universe, const std::string& what) {
    const std::string t = trim(text);
    std::vector<int> out;
    if (t == "all") {
        out.resize(static_cast<std::size_t>(universe));
        std::iota(out.begin(), out.end(), 1);
        return out;
    }
    std::string body = t;
    if (!body.empty() && body.front() == '{') {
        if (body.back() != '}') throw ValidationError(what + ": unterminated '{'");
        body = body.substr(1, body.size() - 2);
    }
    for (const auto& tok : split_tokens(body)) {
        auto dots = tok.find("..");
        auto to_int = [&](const std::string& s) {
            try {
                std::size_t used = 0;
                int v = std::stoi(s, &used);
                if (used != s.size()) throw std::invalid_argument("");
                return v;
            } catch (const std::exception&) {
                throw ValidationError(what + ": bad index '" + tok + "'");
            }
        };
        if (dots == std::string::npos) {
            out.push_back(to_int(tok));
        } else {
            const int lo = to_int(tok.substr(0, dots));
            const int hi = to_int(tok.substr(dots + 2));
            if (lo > hi) throw ValidationError(what + ": empty range '" + tok + "'");
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        }
    }
    if (out.empty()) throw ValidationError(what + ": empty index set");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.front() < 1 || out.back() > universe)
        throw ValidationError(what + ": index outside 1.." + std::to_string(universe));
    return out;
}

void write_transition(const std::string& path, const TransitionMatrix& trans) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    f << "kappa = " << trans.kappa << "\n";
    f << "state_agents = " << trans.n << "\n";
    f << "input_agents = " << trans.m << "\n";
    f << "f = " << format_logical(trans.f) << "\n";
}

TransitionMatrix read_transition(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read " + path);
    TransitionMatrix t;
    std::string line;
    std::map<std::string, std::string> kv;
    while (std::getline(f, line)) {
        const std::string l = trim(strip_comment(line));
        if (l.empty()) continue;
        auto eq = l.find('=');
        if (eq == std::string::npos) throw ValidationError(path + ": expected 'key = value'");
        kv[trim(l.substr(0, eq))] = trim(l.substr(eq + 1));
    }
    for (const char* key : {"kappa", "state_agents", "input_agents", "f"})
        if (!kv.count(key))
            throw ValidationError(path + ": missing key '" + std::string(key) + "'");
    t.kappa = std::stoi(kv["kappa"]);
    t.n = std::stoi(kv["state_agents"]);
    t.m = std::stoi(kv["input_agents"]);
    t.f = parse_logical(kv["f"]);
    t.validate();
    return t;
}

void write_lambda_csv(const std::string& path, const CouplingTable& coupling) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    f << std::setprecision(17);
    f << "z";
    for (int i = 1; i <= coupling.plant_count(); ++i) f << ",lambda_" << i;
    f << "\n";
    for (int z = 1; z <= coupling.profile_count(); ++z) {
        f << z;
        for (int i = 0; i < coupling.plant_count(); ++i) f << ',' << coupling.at(i, z);
        f << "\n";
    }
}

Eigen::MatrixXd read_lambda_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw ValidationError(path + ": empty file");
    const auto header = split_tokens(line, ",");
    if (header.size() < 2 || header[0] != "z")
        throw ValidationError(path + ": expected header 'z,lambda_1,...'");
    const int q = static_cast<int>(header.size()) - 1;
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (trim(line).empty()) continue;
        const auto toks = split_tokens(line, ",");
        if (static_cast<int>(toks.size()) != q + 1)
            throw ValidationError(path + ": row with wrong column count");
        std::vector<double> r;
        for (int i = 1; i <= q; ++i) r.push_back(std::stod(toks[static_cast<std::size_t>(i)]));
        rows.push_back(std::move(r));
    }
    Eigen::MatrixXd m(q, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t z = 0; z < rows.size(); ++z)
        for (int i = 0; i < q; ++i) m(i, static_cast<Eigen::Index>(z)) = rows[z][static_cast<std::size_t>(i)];
    return m;
}

namespace {

void load_ffn(const Doc& doc, const Section& sec, Model& model) {
    Reader r(doc, sec);
    const int kappa = r.integer(r.require("kappa"));
    const int n = r.integer(r.require("state_agents"));
    const int m = r.integer(r.require("input_agents"));
    const int w = r.integer(r.require("modes"));
    if (!is_prime(kappa)) doc.fail(sec.line, "[ffn] kappa = " + std::to_string(kappa) + " is not prime");
    if (n < 1 || m < 0 || w < 1) doc.fail(sec.line, "[ffn] needs state_agents >= 1, input_agents >= 0, modes >= 1");

    FfnSpec probe;  // only for the checked size helpers
    probe.kappa = kappa;
    probe.n = n;
    probe.m = m;
    probe.w = w;
    const int N = probe.state_count();
    const int M = probe.control_count();
    const int MN = probe.profile_count();

    Constraints cons = Constraints::unconstrained(N, M);
    if (const Entry* e = r.find("states")) cons.c_beta = r.index_set(*e, N);
    for (const Entry* e : r.all("controls")) {
        const auto colon = e->value.find(':');
        if (colon == std::string::npos)
            doc.fail(e->line, r.where(*e) + ": expected '<state set> : <control set>'");
        std::vector<int> betas, us;
        try {
            betas = parse_index_set(e->value.substr(0, colon), N, r.where(*e) + " states");
            us = parse_index_set(e->value.substr(colon + 1), M, r.where(*e) + " controls");
        } catch (const ValidationError& err) {
            doc.fail(e->line, err.what());
        }
        for (int beta : betas) {
            if (!std::binary_search(cons.c_beta.begin(), cons.c_beta.end(), beta))
                doc.fail(e->line, r.where(*e) + ": state " + std::to_string(beta) +
                                      " is not in the admissible state set");
            cons.c_u[static_cast<std::size_t>(beta) - 1] = us;
        }
    }

    const Entry* f_entry = r.find("f");
    const Entry* theta_entry = r.find("theta");
    if (f_entry) {
        if (r.find("a", 1) || r.find("b", 1))
            doc.fail(f_entry->line,
                     "[ffn] a direct transition map and coefficient tables are mutually exclusive");
        TransitionMatrix t;
        t.kappa = kappa;
        t.n = n;
        t.m = m;
        t.f = r.logical(*f_entry);
        try {
            t.validate();
        } catch (const ValidationError& err) {
            doc.fail(f_entry->line, std::string(err.what()));
        }
        if (theta_entry) {
            LogicalMatrix th = r.logical(*theta_entry);
            if (th.rows != w || th.col_count() != MN)
                doc.fail(theta_entry->line, r.where(*theta_entry) + ": switching map must be " +
                                                std::to_string(w) + " x " + std::to_string(MN));
        }
        model.trans = std::move(t);
        model.f_direct = true;
    } else {
        if (!theta_entry) doc.fail(sec.line, "[ffn] coefficient route requires 'theta'");
        FfnSpec spec = probe;
        spec.switching.modes = w;
        spec.switching.theta = r.logical(*theta_entry);
        spec.a.resize(static_cast<std::size_t>(n));
        spec.b.resize(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) {
            spec.a[static_cast<std::size_t>(i) - 1] = integer_table(r, r.require("a", i), n, w, kappa);
            if (m >= 1)
                spec.b[static_cast<std::size_t>(i) - 1] =
                    integer_table(r, r.require("b", i), m, w, kappa);
        }
        spec.constraints = cons;
        try {
            spec.validate();
            model.trans = compile_assr(spec);
        } catch (const ValidationError& err) {
            doc.fail(sec.line, std::string(err.what()));
        }
        model.spec = std::move(spec);
    }
    try {
        cons.validate(N, M);
    } catch (const ValidationError& err) {
        doc.fail(sec.line, std::string(err.what()));
    }
    model.cons = std::move(cons);
    r.finish();
}

void load_plant(const Doc& doc, const Section& sec, Model& model) {
    Reader r(doc, sec);
    PlantModel p;
    p.a_closed = r.matrix(r.require("a_closed"));
    p.a_open = r.matrix(r.require("a_open"));
    p.rho = r.real(r.require("rho"));
    const int dim = static_cast<int>(p.a_closed.rows());

    const Entry& qe = r.require("q");
    if (qe.value.rfind("stein", 0) == 0) {
        auto lp = qe.value.find('(');
        if (lp == std::string::npos || qe.value.back() != ')')
            doc.fail(qe.line, r.where(qe) + ": expected stein(<c>) or stein(<c>, <R>)");
        const std::string args = qe.value.substr(lp + 1, qe.value.size() - lp - 2);
        auto comma = args.find(',');
        const std::string c_text = trim(comma == std::string::npos ? args : args.substr(0, comma));
        const double c = parse_real_token(doc, qe.line, c_text, r.where(qe) + " stein rate");
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(dim, dim);
        if (comma != std::string::npos) {
            const std::string rest = trim(args.substr(comma + 1));
            if (rest != "identity") {
                Entry fake = qe;
                fake.value = rest;
                rhs = r.matrix(fake);
            }
        }
        try {
            p.q = solve_stein(p.a_closed, c, rhs);
        } catch (const std::exception& err) {
            doc.fail(qe.line, r.where(qe) + ": " + err.what());
        }
    } else {
        p.q = r.matrix(qe);
    }

    const Entry& xe = r.require("xi");
    if (xe.value == "identity")
        p.xi = Eigen::MatrixXd::Identity(dim, dim);
    else if (xe.value == "zero")
        p.xi = Eigen::MatrixXd::Zero(dim, dim);
    else
        p.xi = r.matrix(xe);

    try {
        p.validate(sec.index - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p.q + p.q.transpose()));
        if (es.eigenvalues().maxCoeff() < 0.0)
            model.notes.push_back("plant " + std::to_string(sec.index) +
                                  ": Lyapunov weight is negative definite; computations use its "
                                  "positive definite mirror");
    } catch (const std::exception& err) {
        doc.fail(sec.line, std::string(err.what()));
    }
    model.plants.push_back(std::move(p));
    r.finish();
}

void load_channel(const Doc& doc, const Section& sec, Model& model) {
    Reader r(doc, sec);
    const int q = static_cast<int>(model.plants.size());
    const int MN = model.trans.profile_count();
    const bool direct = r.find("lambda", 1) != nullptr;
    if (direct) {
        Eigen::MatrixXd rows(q, MN);
        for (int i = 1; i <= q; ++i) {
            const Entry& e = r.require("lambda", i);
            Eigen::MatrixXd row = r.matrix(e);
            if (row.rows() != 1 || row.cols() != MN)
                doc.fail(e.line, r.where(e) + ": expected one row of " + std::to_string(MN) +
                                     " probabilities, got " + std::to_string(row.rows()) + " x " +
                                     std::to_string(row.cols()));
            rows.row(i - 1) = row.row(0);
        }
        try {
            model.coupling = CouplingTable::from_rows(std::move(rows));
        } catch (const ValidationError& err) {
            doc.fail(sec.line, std::string(err.what()));
        }
    } else {
        std::vector<ChannelPrimitives> channels;
        for (int i = 1; i <= q; ++i) {
            ChannelPrimitives ch;
            ch.gamma = r.matrix(r.require("gamma", i));
            Eigen::MatrixXd h = r.matrix(r.require("h", i));
            if (h.rows() != 1 && h.cols() != 1)
                doc.fail(sec.line, "[channel] h " + std::to_string(i) + " must be a vector");
            ch.h = h.rows() == 1 ? Eigen::VectorXd(h.row(0).transpose()) : Eigen::VectorXd(h.col(0));
            ch.mu = r.matrix(r.require("mu", i));
            ch.eta = r.matrix(r.require("eta", i));
            channels.push_back(std::move(ch));
        }
        try {
            model.coupling = coupling_rows(channels, MN);
        } catch (const ValidationError& err) {
            doc.fail(sec.line, std::string(err.what()));
        }
        model.coupling_from_primitives = true;
    }
    r.finish();
}

void load_targets(const Doc& doc, const Section& sec, Model& model) {
    Reader r(doc, sec);
    model.restricted_target = r.index_set(r.require("restricted"), model.trans.state_count());
    r.finish();
    (void)doc;
}

void load_sim(const Doc& doc, const Section& sec, Model& model) {
    Reader r(doc, sec);
    if (const Entry* e = r.find("horizon")) model.sim.horizon = r.integer(*e);
    if (const Entry* e = r.find("replications")) model.sim.replications = r.integer(*e);
    if (const Entry* e = r.find("seed")) {
        try {
            model.sim.seed = std::stoull(e->value);
        } catch (const std::exception&) {
            doc.fail(e->line, r.where(*e) + ": expected an unsigned integer seed");
        }
    }
    if (const Entry* e = r.find("initial")) {
        model.sim.initial_states = r.index_set(*e, model.trans.state_count());
        for (int b : model.sim.initial_states)
            if (!model.cons.state_admissible(b))
                doc.fail(e->line, r.where(*e) + ": initial state " + std::to_string(b) +
                                      " is not admissible");
    }
    for (std::size_t i = 1; i <= model.plants.size(); ++i) {
        if (const Entry* e = r.find("x0", static_cast<int>(i))) {
            Eigen::MatrixXd v = r.matrix(*e);
            if (v.rows() != 1 && v.cols() != 1)
                doc.fail(e->line, r.where(*e) + ": expected a vector");
            Eigen::VectorXd x = v.rows() == 1 ? Eigen::VectorXd(v.row(0).transpose())
                                              : Eigen::VectorXd(v.col(0));
            if (x.size() != model.plants[i - 1].dim())
                doc.fail(e->line, r.where(*e) + ": expected " +
                                      std::to_string(model.plants[i - 1].dim()) + " entries");
            if (model.sim.initial_x.empty())
                for (const auto& p : model.plants)
                    model.sim.initial_x.push_back(Eigen::VectorXd::Zero(p.dim()));
            model.sim.initial_x[i - 1] = std::move(x);
        }
    }
    r.finish();
}

} // namespace

Model load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read model file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string raw = buf.str();
    Doc doc = parse_document(path, raw);

    Model model;
    model.source_path = path;
    model.content_hash = content_hash(raw);

    const Section* ffn = nullptr;
    std::map<int, const Section*> plants;
    const Section* channel = nullptr;
    const Section* targets = nullptr;
    const Section* sim = nullptr;
    for (const auto& sec : doc.sections) {
        if (sec.name == "ffn") {
            if (ffn) doc.fail(sec.line, "duplicate [ffn] section");
            ffn = &sec;
        } else if (sec.name == "plant") {
            if (sec.index < 1) doc.fail(sec.line, "[plant] sections need a 1-based index");
            if (!plants.emplace(sec.index, &sec).second)
                doc.fail(sec.line, "duplicate [plant " + std::to_string(sec.index) + "] section");
        } else if (sec.name == "channel") {
            if (channel) doc.fail(sec.line, "duplicate [channel] section");
            channel = &sec;
        } else if (sec.name == "targets") {
            if (targets) doc.fail(sec.line, "duplicate [targets] section");
            targets = &sec;
        } else if (sec.name == "sim") {
            if (sim) doc.fail(sec.line, "duplicate [sim] section");
            sim = &sec;
        } else {
            doc.fail(sec.line, "unknown section [" + sec.name + "]");
        }
    }
    if (!ffn) doc.fail(1, "model needs an [ffn] section");
    if (plants.empty()) doc.fail(1, "model needs at least one [plant i] section");
    if (!channel) doc.fail(1, "model needs a [channel] section");
    for (int i = 1; i <= static_cast<int>(plants.size()); ++i)
        if (!plants.count(i))
            doc.fail(1, "plant sections must be numbered 1.." + std::to_string(plants.size()) +
                            " without gaps");

    load_ffn(doc, *ffn, model);
    for (int i = 1; i <= static_cast<int>(plants.size()); ++i)
        load_plant(doc, *plants.at(i), model);
    load_channel(doc, *channel, model);
    if (targets) load_targets(doc, *targets, model);
    model.sim.replications = 1;
    model.sim.initial_states = model.cons.c_beta;
    if (sim) load_sim(doc, *sim, model);
    return model;
}

} // namespace opctl
