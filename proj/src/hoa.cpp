#include "ssltl/hoa.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace ssltl {

bool Dra::in_fin(std::size_t pair, int q) const {
    const auto& f = pairs[pair].fin;
    return std::binary_search(f.begin(), f.end(), q);
}

bool Dra::in_inf(std::size_t pair, int q) const {
    const auto& f = pairs[pair].inf;
    return std::binary_search(f.begin(), f.end(), q);
}

std::vector<int> Dra::inf_union() const {
    std::vector<int> out;
    for (const auto& p : pairs) out.insert(out.end(), p.inf.begin(), p.inf.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void validate(const Dra& d) {
    const int n = static_cast<int>(d.num_nodes());
    if (n == 0) throw HoaError("automaton has no states");
    if (d.initial < 0 || d.initial >= n) throw HoaError("initial state out of range");
    if (d.ap.size() > 16) throw HoaError("alphabet too large for explicit letter enumeration");
    if (d.delta.size() != static_cast<std::size_t>(n) * d.num_letters()) throw HoaError("transition table is incomplete");
    for (std::size_t i = 0; i < d.delta.size(); ++i)
        if (d.delta[i] < 0 || d.delta[i] >= n)
            throw HoaError("state " + std::to_string(i / d.num_letters()) + ", letter " +
                           std::to_string(i % d.num_letters()) + ": no successor");
    if (d.pairs.empty()) throw HoaError("automaton has no acceptance pair");
    for (const auto& p : d.pairs)
        for (const auto* set : {&p.fin, &p.inf})
            for (int q : *set)
                if (q < 0 || q >= n) throw HoaError("acceptance set mentions an unknown state");
}

namespace {

enum class Tok { Header, Int, String, Ident, Punct, Body, End, Eof };

struct Token {
    Tok kind;
    std::string text;
    long value = 0;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token peek() {
        if (!peeked_) peeked_ = lex();
        return *peeked_;
    }

    Token next() {
        Token t = peek();
        peeked_.reset();
        return t;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw HoaError("HOA line " + std::to_string(line_) + ": " + what);
    }

  private:
    Token lex() {
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                if (src_[pos_] == '\n') ++line_;
                ++pos_;
            }
            if (src_.compare(pos_, 2, "/*") == 0) {
                auto end = src_.find("*/", pos_ + 2);
                if (end == std::string_view::npos) fail("unterminated comment");
                for (std::size_t i = pos_; i < end; ++i) line_ += src_[i] == '\n';
                pos_ = end + 2;
                continue;
            }
            break;
        }
        if (pos_ >= src_.size()) return {Tok::Eof, {}};
        char c = src_[pos_];
        if (src_.compare(pos_, 8, "--BODY--") == 0) {
            pos_ += 8;
            return {Tok::Body, "--BODY--"};
        }
        if (src_.compare(pos_, 7, "--END--") == 0) {
            pos_ += 7;
            return {Tok::End, "--END--"};
        }
        if (src_.compare(pos_, 9, "--ABORT--") == 0) fail("automaton aborted");
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            std::string s(src_.substr(start, pos_ - start));
            return {Tok::Int, s, std::stol(s)};
        }
        if (c == '"') {
            std::string s;
            ++pos_;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
                s += src_[pos_++];
            }
            if (pos_ >= src_.size()) fail("unterminated string");
            ++pos_;
            return {Tok::String, s};
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '@') {
            std::size_t start = pos_;
            ++pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '-'))
                ++pos_;
            std::string s(src_.substr(start, pos_ - start));
            if (pos_ < src_.size() && src_[pos_] == ':') {
                ++pos_;
                return {Tok::Header, s};
            }
            return {Tok::Ident, s};
        }
        ++pos_;
        return {Tok::Punct, std::string(1, c)};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::optional<Token> peeked_;
};

// Label expressions over AP indices, evaluated per letter.
struct LabelExpr {
    enum Kind { True, False, Ap, Not, And, Or } kind;
    int ap = 0;
    std::unique_ptr<LabelExpr> lhs, rhs;

    bool eval(Letter l) const {
        switch (kind) {
        case True: return true;
        case False: return false;
        case Ap: return (l >> ap) & 1u;
        case Not: return !lhs->eval(l);
        case And: return lhs->eval(l) && rhs->eval(l);
        case Or: return lhs->eval(l) || rhs->eval(l);
        }
        return false;
    }
};

std::unique_ptr<LabelExpr> make(LabelExpr::Kind k, std::unique_ptr<LabelExpr> a = {}, std::unique_ptr<LabelExpr> b = {}) {
    auto e = std::make_unique<LabelExpr>();
    e->kind = k;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}

class LabelParser {
  public:
    LabelParser(Lexer& lx, int num_ap) : lx_(lx), num_ap_(num_ap) {}

    std::unique_ptr<LabelExpr> parse_or() {
        auto e = parse_and();
        while (is_punct("|")) {
            lx_.next();
            e = make(LabelExpr::Or, std::move(e), parse_and());
        }
        return e;
    }

  private:
    bool is_punct(const char* p) {
        auto t = lx_.peek();
        return t.kind == Tok::Punct && t.text == p;
    }

    std::unique_ptr<LabelExpr> parse_and() {
        auto e = parse_atom();
        while (is_punct("&")) {
            lx_.next();
            e = make(LabelExpr::And, std::move(e), parse_atom());
        }
        return e;
    }

    std::unique_ptr<LabelExpr> parse_atom() {
        Token t = lx_.next();
        if (t.kind == Tok::Punct && t.text == "!") return make(LabelExpr::Not, parse_atom());
        if (t.kind == Tok::Punct && t.text == "(") {
            auto e = parse_or();
            if (lx_.next().text != ")") lx_.fail("expected ')' in label");
            return e;
        }
        if (t.kind == Tok::Ident && t.text == "t") return make(LabelExpr::True);
        if (t.kind == Tok::Ident && t.text == "f") return make(LabelExpr::False);
        if (t.kind == Tok::Int) {
            if (t.value >= num_ap_) lx_.fail("label uses AP index " + t.text + " outside the declared AP");
            auto e = make(LabelExpr::Ap);
            e->ap = static_cast<int>(t.value);
            return e;
        }
        if (t.kind == Tok::Ident && !t.text.empty() && t.text[0] == '@') lx_.fail("aliases are not supported");
        lx_.fail("unexpected token '" + t.text + "' in label");
    }

    Lexer& lx_;
    int num_ap_;
};

// Acceptance condition, converted to disjunctive normal form over Fin/Inf atoms.
struct AccAtom {
    bool inf;
    int set;
};
using AccDnf = std::vector<std::vector<AccAtom>>;

class AccParser {
  public:
    explicit AccParser(Lexer& lx) : lx_(lx) {}

    AccDnf parse_or() {
        AccDnf d = parse_and();
        while (lx_.peek().kind == Tok::Punct && lx_.peek().text == "|") {
            lx_.next();
            AccDnf r = parse_and();
            d.insert(d.end(), r.begin(), r.end());
        }
        return d;
    }

  private:
    AccDnf parse_and() {
        AccDnf d = parse_atom();
        while (lx_.peek().kind == Tok::Punct && lx_.peek().text == "&") {
            lx_.next();
            AccDnf r = parse_atom();
            AccDnf out;
            for (const auto& x : d)
                for (const auto& y : r) {
                    auto c = x;
                    c.insert(c.end(), y.begin(), y.end());
                    out.push_back(std::move(c));
                }
            d = std::move(out);
        }
        return d;
    }

    AccDnf parse_atom() {
        Token t = lx_.next();
        if (t.kind == Tok::Punct && t.text == "(") {
            auto d = parse_or();
            if (lx_.next().text != ")") lx_.fail("expected ')' in acceptance");
            return d;
        }
        if (t.kind == Tok::Ident && t.text == "t") return {{}};
        if (t.kind == Tok::Ident && t.text == "f") return {};
        if (t.kind == Tok::Ident && (t.text == "Fin" || t.text == "Inf")) {
            if (lx_.next().text != "(") lx_.fail("expected '(' after " + t.text);
            Token s = lx_.next();
            if (s.kind != Tok::Int) lx_.fail("unsupported acceptance atom (complemented set?)");
            if (lx_.next().text != ")") lx_.fail("expected ')' after acceptance set");
            return {{AccAtom{t.text == "Inf", static_cast<int>(s.value)}}};
        }
        lx_.fail("unexpected token '" + t.text + "' in acceptance");
    }

    Lexer& lx_;
};

}  // namespace

Dra parse_hoa(std::string_view text) {
    Lexer lx(text);
    Dra d;
    long num_states = -1;
    int num_sets = -1;
    AccDnf acc;
    bool have_acc = false, have_start = false, have_version = false;

    // Header
    for (;;) {
        Token t = lx.next();
        if (t.kind == Tok::Body) break;
        if (t.kind == Tok::Eof) lx.fail("missing --BODY--");
        if (t.kind != Tok::Header) lx.fail("expected a header item, got '" + t.text + "'");
        if (t.text == "HOA") {
            Token v = lx.next();
            if (v.text != "v1") lx.fail("unsupported HOA version '" + v.text + "'");
            have_version = true;
        } else if (t.text == "States") {
            Token v = lx.next();
            if (v.kind != Tok::Int) lx.fail("States: expects an integer");
            num_states = v.value;
        } else if (t.text == "Start") {
            if (have_start) lx.fail("multiple initial states are not supported");
            Token v = lx.next();
            if (v.kind != Tok::Int) lx.fail("Start: expects an integer");
            if (lx.peek().kind == Tok::Punct && lx.peek().text == "&") lx.fail("alternating initial states are not supported");
            d.initial = static_cast<int>(v.value);
            have_start = true;
        } else if (t.text == "AP") {
            Token v = lx.next();
            if (v.kind != Tok::Int) lx.fail("AP: expects a count");
            for (long i = 0; i < v.value; ++i) {
                Token s = lx.next();
                if (s.kind != Tok::String) lx.fail("AP: expects quoted names");
                d.ap.push_back(s.text);
            }
        } else if (t.text == "Acceptance") {
            Token v = lx.next();
            if (v.kind != Tok::Int) lx.fail("Acceptance: expects a set count");
            num_sets = static_cast<int>(v.value);
            acc = AccParser(lx).parse_or();
            have_acc = true;
        } else if (t.text == "Alias") {
            lx.fail("aliases are not supported");
        } else {
            // acc-name, name, tool, properties and unknown items: skip their values.
            if (t.text == "properties") {
                while (lx.peek().kind == Tok::Ident) {
                    Token p = lx.next();
                    if (p.text == "trans-acc") lx.fail("transition-based acceptance is not supported");
                }
                continue;
            }
            while (lx.peek().kind != Tok::Header && lx.peek().kind != Tok::Body && lx.peek().kind != Tok::Eof) lx.next();
        }
    }
    if (!have_version) lx.fail("missing 'HOA: v1'");
    if (!have_acc) lx.fail("missing Acceptance:");
    if (!have_start) lx.fail("missing Start:");
    if (d.ap.size() > 16) lx.fail("too many atomic propositions");

    const Letter letters = d.num_letters();
    std::vector<std::vector<int>> state_sets;  // acceptance sets of each state
    std::vector<bool> declared;
    auto ensure = [&](long idx) {
        if (idx < 0) lx.fail("negative state index");
        if (num_states >= 0 && idx >= num_states) lx.fail("state " + std::to_string(idx) + " exceeds States:");
        if (static_cast<std::size_t>(idx) >= d.nodes.size()) {
            for (std::size_t i = d.nodes.size(); i <= static_cast<std::size_t>(idx); ++i)
                d.nodes.push_back(std::to_string(i));
            d.delta.resize(d.nodes.size() * letters, -1);
            state_sets.resize(d.nodes.size());
            declared.resize(d.nodes.size(), false);
        }
    };
    if (num_states >= 0) ensure(num_states - 1);

    auto read_acc_sig = [&]() {
        std::vector<int> sets;
        if (lx.peek().kind == Tok::Punct && lx.peek().text == "{") {
            lx.next();
            while (lx.peek().kind == Tok::Int) sets.push_back(static_cast<int>(lx.next().value));
            if (lx.next().text != "}") lx.fail("expected '}'");
        }
        return sets;
    };

    // Body
    Token t = lx.next();
    while (t.kind != Tok::End) {
        if (!(t.kind == Tok::Header && t.text == "State")) lx.fail("expected State:, got '" + t.text + "'");
        if (lx.peek().kind == Tok::Punct && lx.peek().text == "[") lx.fail("state-labeled automata are not supported");
        Token id = lx.next();
        if (id.kind != Tok::Int) lx.fail("State: expects an index");
        ensure(id.value);
        const int q = static_cast<int>(id.value);
        if (declared[q]) lx.fail("state " + id.text + " declared twice");
        declared[q] = true;
        if (lx.peek().kind == Tok::String) d.nodes[q] = lx.next().text;
        state_sets[q] = read_acc_sig();

        Letter implicit_next = 0;
        bool saw_explicit = false, saw_implicit = false;
        for (;;) {
            Token p = lx.peek();
            if (p.kind == Tok::End || (p.kind == Tok::Header && p.text == "State")) break;
            std::unique_ptr<LabelExpr> label;
            if (p.kind == Tok::Punct && p.text == "[") {
                lx.next();
                label = LabelParser(lx, static_cast<int>(d.ap.size())).parse_or();
                if (lx.next().text != "]") lx.fail("expected ']'");
                saw_explicit = true;
            } else {
                saw_implicit = true;
            }
            if (saw_explicit && saw_implicit) lx.fail("state " + id.text + " mixes implicit and explicit labels");
            Token target = lx.next();
            if (target.kind != Tok::Int) lx.fail("edge target must be a state index");
            if (lx.peek().kind == Tok::Punct && lx.peek().text == "&") lx.fail("alternating edges are not supported");
            ensure(target.value);
            if (!read_acc_sig().empty()) lx.fail("transition-based acceptance is not supported");
            const int dst = static_cast<int>(target.value);
            auto assign = [&](Letter l) {
                int& slot = d.delta[static_cast<std::size_t>(q) * letters + l];
                if (slot >= 0 && slot != dst)
                    lx.fail("non-deterministic: state " + id.text + ", letter " + std::to_string(l) + " has two successors");
                slot = dst;
            };
            if (label) {
                for (Letter l = 0; l < letters; ++l)
                    if (label->eval(l)) assign(l);
            } else {
                if (implicit_next >= letters) lx.fail("state " + id.text + " has too many implicit edges");
                assign(implicit_next++);
            }
        }
        t = lx.next();
    }

    for (std::size_t q = 0; q < d.nodes.size(); ++q) {
        if (!declared[q]) lx.fail("state " + std::to_string(q) + " is never declared");
        for (Letter l = 0; l < letters; ++l)
            if (d.delta[q * letters + l] < 0)
                lx.fail("incomplete: state " + std::to_string(q) + " has no edge for letter " + std::to_string(l));
    }

    // Acceptance: each disjunct must be [Fin(i) &] Inf(j), Fin(i), or t.
    const int n = static_cast<int>(d.nodes.size());
    auto members = [&](int set) {
        if (set < 0 || set >= num_sets) lx.fail("acceptance set " + std::to_string(set) + " out of range");
        std::vector<int> out;
        for (int q = 0; q < n; ++q)
            if (std::find(state_sets[q].begin(), state_sets[q].end(), set) != state_sets[q].end()) out.push_back(q);
        return out;
    };
    std::vector<int> all(n);
    for (int q = 0; q < n; ++q) all[q] = q;
    for (const auto& conj : acc) {
        std::optional<int> fin, inf;
        for (const auto& a : conj) {
            auto& slot = a.inf ? inf : fin;
            if (slot && *slot != a.set) lx.fail("unsupported acceptance shape (not Rabin)");
            slot = a.set;
        }
        RabinPair pair;
        pair.fin = fin ? members(*fin) : std::vector<int>{};
        pair.inf = inf ? members(*inf) : all;
        d.pairs.push_back(std::move(pair));
    }
    if (d.pairs.empty()) lx.fail("acceptance condition is unsatisfiable ('f')");
    validate(d);
    return d;
}

Dra load_hoa(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HoaError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_hoa(ss.str());
    } catch (const HoaError& e) {
        throw HoaError(path.string() + ": " + e.what());
    }
}

std::string to_hoa(const Dra& d) {
    std::ostringstream out;
    const int n = static_cast<int>(d.num_nodes());
    out << "HOA: v1\n";
    out << "States: " << n << "\n";
    out << "Start: " << d.initial << "\n";
    out << "AP: " << d.ap.size();
    for (const auto& p : d.ap) out << " \"" << p << "\"";
    out << "\n";
    out << "acc-name: Rabin " << d.pairs.size() << "\n";
    out << "Acceptance: " << 2 * d.pairs.size();
    for (std::size_t i = 0; i < d.pairs.size(); ++i)
        out << (i ? " | " : " ") << "(Fin(" << 2 * i << ") & Inf(" << 2 * i + 1 << "))";
    out << "\n";
    out << "properties: state-acc deterministic complete\n";
    out << "--BODY--\n";
    for (int q = 0; q < n; ++q) {
        out << "State: " << q << " \"" << d.nodes[q] << "\"";
        std::vector<std::size_t> sets;
        for (std::size_t i = 0; i < d.pairs.size(); ++i) {
            if (d.in_fin(i, q)) sets.push_back(2 * i);
            if (d.in_inf(i, q)) sets.push_back(2 * i + 1);
        }
        if (!sets.empty()) {
            out << " {";
            for (std::size_t k = 0; k < sets.size(); ++k) out << (k ? " " : "") << sets[k];
            out << "}";
        }
        out << "\n";
        for (Letter l = 0; l < d.num_letters(); ++l) {
            out << "[";
            if (d.ap.empty()) out << "t";
            for (std::size_t i = 0; i < d.ap.size(); ++i) out << (i ? "&" : "") << (((l >> i) & 1u) ? "" : "!") << i;
            out << "] " << d.step(q, l) << "\n";
        }
    }
    out << "--END--\n";
    return out.str();
}

}  // namespace ssltl
