#pragma once

#include "esmck/expr.hpp"

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace esmck::ir {

struct ParseError : Error {
    int line;
    int col;
    ParseError(const std::string& msg, int line_, int col_)
        : Error(msg + " (line " + std::to_string(line_) + ", col " + std::to_string(col_) + ")"),
          line(line_), col(col_) {}
};

// ---- statements ---------------------------------------------------------------

struct StmtNode;
using Stmt = std::shared_ptr<const StmtNode>;
using Block = std::vector<Stmt>;

enum class StmtKind {
    Assign,     // var = expr;
    Havoc,      // havoc var;
    Assume,     // assume(e);
    Assert,     // assert(e) : "label";
    If,         // if (c) {..} else {..}
    ChooseInt,  // var = choose(bound);   nondeterministic integer in [0, bound)
    For,        // for v in 0..count {..}
    Evolve,     // evolve { v' = rhs; ... } dt d steps n;
    Call,       // call f;
    Print,      // print;
};

struct OdeEquation {
    std::string var;
    Expr rhs;
};

struct StmtNode {
    StmtKind kind;
    std::string var;               // Assign/Havoc/ChooseInt/For target, Call name
    Expr expr;                     // Assign rhs, Assume/Assert condition, ChooseInt bound,
                                   // For count, If condition, Evolve step bound
    std::string label;             // Assert label ("" if none)
    Block body;                    // If then-block, For/Evolve body
    Block elseBody;                // If else-block
    std::vector<OdeEquation> odes; // Evolve
    std::string dtVar;             // Evolve
};

inline Stmt mkStmt(StmtNode n) { return std::make_shared<const StmtNode>(std::move(n)); }

inline Stmt stmtAssign(std::string v, Expr e) {
    StmtNode n; n.kind = StmtKind::Assign; n.var = std::move(v); n.expr = std::move(e);
    return mkStmt(std::move(n));
}
inline Stmt stmtHavoc(std::string v) {
    StmtNode n; n.kind = StmtKind::Havoc; n.var = std::move(v);
    return mkStmt(std::move(n));
}
inline Stmt stmtAssume(Expr e) {
    StmtNode n; n.kind = StmtKind::Assume; n.expr = std::move(e);
    return mkStmt(std::move(n));
}
inline Stmt stmtAssert(Expr e, std::string label = "") {
    StmtNode n; n.kind = StmtKind::Assert; n.expr = std::move(e); n.label = std::move(label);
    return mkStmt(std::move(n));
}
inline Stmt stmtIf(Expr c, Block thenB, Block elseB = {}) {
    StmtNode n; n.kind = StmtKind::If; n.expr = std::move(c);
    n.body = std::move(thenB); n.elseBody = std::move(elseB);
    return mkStmt(std::move(n));
}
inline Stmt stmtChoose(std::string v, Expr bound) {
    StmtNode n; n.kind = StmtKind::ChooseInt; n.var = std::move(v); n.expr = std::move(bound);
    return mkStmt(std::move(n));
}
inline Stmt stmtFor(std::string v, Expr count, Block body) {
    StmtNode n; n.kind = StmtKind::For; n.var = std::move(v); n.expr = std::move(count);
    n.body = std::move(body);
    return mkStmt(std::move(n));
}
inline Stmt stmtEvolve(std::vector<OdeEquation> odes, std::string dtVar, Expr steps) {
    StmtNode n; n.kind = StmtKind::Evolve; n.odes = std::move(odes);
    n.dtVar = std::move(dtVar); n.expr = std::move(steps);
    return mkStmt(std::move(n));
}
inline Stmt stmtCall(std::string f) {
    StmtNode n; n.kind = StmtKind::Call; n.var = std::move(f);
    return mkStmt(std::move(n));
}
inline Stmt stmtPrint() {
    StmtNode n; n.kind = StmtKind::Print;
    return mkStmt(std::move(n));
}

// ---- program ------------------------------------------------------------------

struct InputDecl {
    std::string name;
    VSort sort = VSort::Real;
    std::vector<Expr> assumes;  // boolean exprs over inputs declared so far
};

struct Program {
    std::vector<InputDecl> inputs;
    std::vector<std::string> globals;
    std::vector<std::pair<std::string, Block>> functions;
    Block mainBlock;

    const Block* findFunction(const std::string& name) const {
        for (const auto& [n, b] : functions)
            if (n == name) return &b;
        return nullptr;
    }
    const InputDecl* findInput(const std::string& name) const {
        for (const auto& i : inputs)
            if (i.name == name) return &i;
        return nullptr;
    }
    bool isGlobal(const std::string& name) const {
        return std::find(globals.begin(), globals.end(), name) != globals.end();
    }
};

// ---- structural equality --------------------------------------------------------

inline bool stmtEq(const Stmt& x, const Stmt& y);

inline bool blockEq(const Block& x, const Block& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!stmtEq(x[i], y[i])) return false;
    return true;
}

inline bool stmtEq(const Stmt& x, const Stmt& y) {
    if (x.get() == y.get()) return true;
    if (x->kind != y->kind || x->var != y->var || x->label != y->label ||
        x->dtVar != y->dtVar)
        return false;
    if ((x->expr == nullptr) != (y->expr == nullptr)) return false;
    if (x->expr && !structEq(x->expr, y->expr)) return false;
    if (x->odes.size() != y->odes.size()) return false;
    for (std::size_t i = 0; i < x->odes.size(); ++i)
        if (x->odes[i].var != y->odes[i].var || !structEq(x->odes[i].rhs, y->odes[i].rhs))
            return false;
    return blockEq(x->body, y->body) && blockEq(x->elseBody, y->elseBody);
}

inline bool programEq(const Program& p, const Program& q) {
    if (p.inputs.size() != q.inputs.size() || p.globals != q.globals ||
        p.functions.size() != q.functions.size())
        return false;
    for (std::size_t i = 0; i < p.inputs.size(); ++i) {
        const auto& a = p.inputs[i];
        const auto& b = q.inputs[i];
        if (a.name != b.name || a.sort != b.sort || a.assumes.size() != b.assumes.size())
            return false;
        for (std::size_t j = 0; j < a.assumes.size(); ++j)
            if (!structEq(a.assumes[j], b.assumes[j])) return false;
    }
    for (std::size_t i = 0; i < p.functions.size(); ++i) {
        if (p.functions[i].first != q.functions[i].first) return false;
        if (!blockEq(p.functions[i].second, q.functions[i].second)) return false;
    }
    return blockEq(p.mainBlock, q.mainBlock);
}

// ---- lexer ------------------------------------------------------------------

namespace detail {

enum class TokType {
    Ident, Number, String,
    Assign, EqEq, Lt, Le, Gt, Ge, Bang, AndAnd, OrOr,
    Plus, Minus, Star, Slash,
    LParen, RParen, LBrace, RBrace,
    Semi, Colon, Comma, Prime, DotDot,
    End,
};

struct Token {
    TokType type;
    std::string text;
    int line;
    int col;
};

inline bool isIdentStart(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool isIdentChar(char c) {
    return isIdentStart(c) || (c >= '0' && c <= '9');
}

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto push = [&](TokType t, std::string text, int l, int c) {
        out.push_back(Token{t, std::move(text), l, c});
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') { ++line; col = 1; ++i; continue; }
        if (c == ' ' || c == '\t' || c == '\r') { ++col; ++i; continue; }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        int tl = line, tc = col;
        if (isIdentStart(c)) {
            std::size_t j = i;
            while (j < src.size() && isIdentChar(src[j])) ++j;
            push(TokType::Ident, src.substr(i, j - i), tl, tc);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (c >= '0' && c <= '9') {
            std::size_t j = i;
            while (j < src.size() && src[j] >= '0' && src[j] <= '9') ++j;
            if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
                src[j + 1] >= '0' && src[j + 1] <= '9') {
                ++j;
                while (j < src.size() && src[j] >= '0' && src[j] <= '9') ++j;
            }
            push(TokType::Number, src.substr(i, j - i), tl, tc);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
            if (j >= src.size() || src[j] != '"')
                throw ParseError("unterminated string literal", tl, tc);
            push(TokType::String, src.substr(i + 1, j - i - 1), tl, tc);
            col += static_cast<int>(j - i + 1);
            i = j + 1;
            continue;
        }
        auto two = [&](char next) { return i + 1 < src.size() && src[i + 1] == next; };
        switch (c) {
            case '=':
                if (two('=')) { push(TokType::EqEq, "==", tl, tc); i += 2; col += 2; }
                else { push(TokType::Assign, "=", tl, tc); ++i; ++col; }
                continue;
            case '<':
                if (two('=')) { push(TokType::Le, "<=", tl, tc); i += 2; col += 2; }
                else { push(TokType::Lt, "<", tl, tc); ++i; ++col; }
                continue;
            case '>':
                if (two('=')) { push(TokType::Ge, ">=", tl, tc); i += 2; col += 2; }
                else { push(TokType::Gt, ">", tl, tc); ++i; ++col; }
                continue;
            case '&':
                if (two('&')) { push(TokType::AndAnd, "&&", tl, tc); i += 2; col += 2; continue; }
                throw ParseError("stray '&'", tl, tc);
            case '|':
                if (two('|')) { push(TokType::OrOr, "||", tl, tc); i += 2; col += 2; continue; }
                throw ParseError("stray '|'", tl, tc);
            case '.':
                if (two('.')) { push(TokType::DotDot, "..", tl, tc); i += 2; col += 2; continue; }
                throw ParseError("stray '.'", tl, tc);
            case '!': push(TokType::Bang, "!", tl, tc); ++i; ++col; continue;
            case '+': push(TokType::Plus, "+", tl, tc); ++i; ++col; continue;
            case '-': push(TokType::Minus, "-", tl, tc); ++i; ++col; continue;
            case '*': push(TokType::Star, "*", tl, tc); ++i; ++col; continue;
            case '/': push(TokType::Slash, "/", tl, tc); ++i; ++col; continue;
            case '(': push(TokType::LParen, "(", tl, tc); ++i; ++col; continue;
            case ')': push(TokType::RParen, ")", tl, tc); ++i; ++col; continue;
            case '{': push(TokType::LBrace, "{", tl, tc); ++i; ++col; continue;
            case '}': push(TokType::RBrace, "}", tl, tc); ++i; ++col; continue;
            case ';': push(TokType::Semi, ";", tl, tc); ++i; ++col; continue;
            case ':': push(TokType::Colon, ":", tl, tc); ++i; ++col; continue;
            case ',': push(TokType::Comma, ",", tl, tc); ++i; ++col; continue;
            case '\'': push(TokType::Prime, "'", tl, tc); ++i; ++col; continue;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
        }
    }
    out.push_back(Token{TokType::End, "", line, col});
    return out;
}

inline const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {
        "input", "int", "real", "assume", "assert", "havoc", "choose",
        "evolve", "var", "func", "main", "if", "else", "for", "call", "print",
    };
    return kw;
}

// ---- parser ------------------------------------------------------------------

class Parser {
public:
    explicit Parser(const std::string& src) : toks_(lex(src)) {}

    Program parse() {
        Program p;
        std::vector<std::pair<std::string, Expr>> initializers;
        while (!atKeyword("main")) {
            if (peek().type == TokType::End)
                throw err("expected 'main' block before end of input");
            if (atKeyword("input")) {
                parseInput(p);
            } else if (atKeyword("var")) {
                parseVar(p, initializers);
            } else if (atKeyword("func")) {
                parseFunc(p);
            } else {
                throw err("expected 'input', 'var', 'func' or 'main'");
            }
        }
        expectKeyword("main");
        Block body = parseBlock();
        // Variable initializers run before the first main statement.
        for (auto it = initializers.rbegin(); it != initializers.rend(); ++it)
            body.insert(body.begin(), stmtAssign(it->first, it->second));
        p.mainBlock = std::move(body);
        if (peek().type != TokType::End) throw err("unexpected input after main block");
        validate(p);
        return p;
    }

    static void validate(const Program& p);

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool atKeyword(const char* kw) const {
        return peek().type == TokType::Ident && peek().text == kw;
    }
    void expectKeyword(const char* kw) {
        if (!atKeyword(kw)) throw err(std::string("expected '") + kw + "'");
        advance();
    }
    const Token& expect(TokType t, const char* what) {
        if (peek().type != t) throw err(std::string("expected ") + what);
        return advance();
    }
    ParseError err(const std::string& msg) const {
        return ParseError(msg + ", got '" + (peek().type == TokType::End ? "<eof>" : peek().text) + "'",
                          peek().line, peek().col);
    }
    ParseError errAt(const std::string& msg, const Token& t) const {
        return ParseError(msg, t.line, t.col);
    }

    std::string expectIdent(const char* what) {
        const Token& t = expect(TokType::Ident, what);
        if (keywords().count(t.text))
            throw errAt("keyword '" + t.text + "' cannot be used as a name", t);
        return t.text;
    }

    void parseInput(Program& p) {
        expectKeyword("input");
        InputDecl d;
        if (atKeyword("int")) { advance(); d.sort = VSort::Int; }
        else if (atKeyword("real")) { advance(); d.sort = VSort::Real; }
        else throw err("expected 'int' or 'real'");
        d.name = expectIdent("input name");
        if (atKeyword("assume")) {
            advance();
            expect(TokType::LParen, "'('");
            d.assumes = splitConjuncts(parseExpr(Sort::Bool));
            expect(TokType::RParen, "')'");
        }
        expect(TokType::Semi, "';'");
        p.inputs.push_back(std::move(d));
    }

    void parseVar(Program& p, std::vector<std::pair<std::string, Expr>>& inits) {
        expectKeyword("var");
        std::string name = expectIdent("variable name");
        if (peek().type == TokType::Assign) {
            advance();
            Expr e = parseExpr(Sort::Arith);
            inits.emplace_back(name, std::move(e));
        }
        expect(TokType::Semi, "';'");
        p.globals.push_back(std::move(name));
    }

    void parseFunc(Program& p) {
        expectKeyword("func");
        std::string name = expectIdent("function name");
        Block b = parseBlock();
        p.functions.emplace_back(std::move(name), std::move(b));
    }

    Block parseBlock() {
        expect(TokType::LBrace, "'{'");
        Block b;
        while (peek().type != TokType::RBrace) {
            if (peek().type == TokType::End) throw err("unterminated block");
            b.push_back(parseStmt());
        }
        advance();
        return b;
    }

    Stmt parseStmt() {
        if (atKeyword("havoc")) {
            advance();
            std::string v = expectIdent("variable");
            expect(TokType::Semi, "';'");
            return stmtHavoc(std::move(v));
        }
        if (atKeyword("assume")) {
            advance();
            expect(TokType::LParen, "'('");
            Expr e = parseExpr(Sort::Bool);
            expect(TokType::RParen, "')'");
            expect(TokType::Semi, "';'");
            return stmtAssume(std::move(e));
        }
        if (atKeyword("assert")) {
            advance();
            expect(TokType::LParen, "'('");
            Expr e = parseExpr(Sort::Bool);
            expect(TokType::RParen, "')'");
            std::string label;
            if (peek().type == TokType::Colon) {
                advance();
                label = expect(TokType::String, "assert label string").text;
            }
            expect(TokType::Semi, "';'");
            return stmtAssert(std::move(e), std::move(label));
        }
        if (atKeyword("if")) {
            advance();
            expect(TokType::LParen, "'('");
            Expr c = parseExpr(Sort::Bool);
            expect(TokType::RParen, "')'");
            Block thenB = parseBlock();
            Block elseB;
            if (atKeyword("else")) {
                advance();
                elseB = parseBlock();
            }
            return stmtIf(std::move(c), std::move(thenB), std::move(elseB));
        }
        if (atKeyword("for")) {
            advance();
            std::string v = expectIdent("loop variable");
            if (!(peek().type == TokType::Ident && peek().text == "in")) throw err("expected 'in'");
            advance();
            const Token& zero = expect(TokType::Number, "'0'");
            if (zero.text != "0") throw errAt("loop ranges start at 0", zero);
            expect(TokType::DotDot, "'..'");
            Expr count = parseExpr(Sort::Arith);
            Block body = parseBlock();
            return stmtFor(std::move(v), std::move(count), std::move(body));
        }
        if (atKeyword("evolve")) {
            advance();
            expect(TokType::LBrace, "'{'");
            std::vector<OdeEquation> odes;
            do {
                std::string v = expectIdent("ODE variable");
                expect(TokType::Prime, "'''");
                expect(TokType::Assign, "'='");
                Expr rhs = parseExpr(Sort::Arith);
                expect(TokType::Semi, "';'");
                for (const auto& o : odes)
                    if (o.var == v) throw err("duplicate ODE for variable " + v);
                odes.push_back(OdeEquation{std::move(v), std::move(rhs)});
            } while (peek().type != TokType::RBrace);
            advance();
            if (!(peek().type == TokType::Ident && peek().text == "dt")) throw err("expected 'dt'");
            advance();
            std::string dtVar = expectIdent("dt variable");
            if (!(peek().type == TokType::Ident && peek().text == "steps")) throw err("expected 'steps'");
            advance();
            Expr steps = parseExpr(Sort::Arith);
            expect(TokType::Semi, "';'");
            return stmtEvolve(std::move(odes), std::move(dtVar), std::move(steps));
        }
        if (atKeyword("call")) {
            advance();
            std::string f = expectIdent("function name");
            expect(TokType::Semi, "';'");
            return stmtCall(std::move(f));
        }
        if (atKeyword("print")) {
            advance();
            expect(TokType::Semi, "';'");
            return stmtPrint();
        }
        // Assignment or choose.
        std::string v = expectIdent("statement");
        expect(TokType::Assign, "'='");
        if (atKeyword("choose")) {
            advance();
            expect(TokType::LParen, "'('");
            Expr bound = parseExpr(Sort::Arith);
            expect(TokType::RParen, "')'");
            expect(TokType::Semi, "';'");
            return stmtChoose(std::move(v), std::move(bound));
        }
        Expr rhs = parseExpr(Sort::Arith);
        expect(TokType::Semi, "';'");
        return stmtAssign(std::move(v), std::move(rhs));
    }

    static std::vector<Expr> splitConjuncts(const Expr& e) {
        std::vector<Expr> out;
        ir::splitConjuncts(e, out);
        return out;
    }

    Expr parseExpr(Sort want) {
        const Token& at = peek();
        Expr e = parseOr();
        if (e->sort() != want)
            throw errAt(want == Sort::Bool ? "expected a boolean expression"
                                           : "expected an arithmetic expression",
                        at);
        return e;
    }

    Expr parseOr() {
        Expr e = parseAnd();
        while (peek().type == TokType::OrOr) {
            const Token& t = advance();
            Expr rhs = parseAnd();
            requireSort(e, Sort::Bool, t);
            requireSort(rhs, Sort::Bool, t);
            e = mkOr(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parseAnd() {
        Expr e = parseCmp();
        while (peek().type == TokType::AndAnd) {
            const Token& t = advance();
            Expr rhs = parseCmp();
            requireSort(e, Sort::Bool, t);
            requireSort(rhs, Sort::Bool, t);
            e = mkAnd(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parseCmp() {
        Expr e = parseAddSub();
        TokType t = peek().type;
        if (t == TokType::Lt || t == TokType::Le || t == TokType::EqEq ||
            t == TokType::Ge || t == TokType::Gt) {
            const Token& tok = advance();
            Expr rhs = parseAddSub();
            requireSort(e, Sort::Arith, tok);
            requireSort(rhs, Sort::Arith, tok);
            CmpOp op = t == TokType::Lt   ? CmpOp::Lt
                       : t == TokType::Le ? CmpOp::Le
                       : t == TokType::EqEq ? CmpOp::Eq
                       : t == TokType::Ge ? CmpOp::Ge
                                          : CmpOp::Gt;
            e = mkCmp(op, std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parseAddSub() {
        Expr e = parseMulDiv();
        while (peek().type == TokType::Plus || peek().type == TokType::Minus) {
            const Token& t = advance();
            Expr rhs = parseMulDiv();
            requireSort(e, Sort::Arith, t);
            requireSort(rhs, Sort::Arith, t);
            e = t.type == TokType::Plus ? mkAdd(std::move(e), std::move(rhs))
                                        : mkSub(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parseMulDiv() {
        Expr e = parseUnary();
        while (peek().type == TokType::Star || peek().type == TokType::Slash) {
            const Token& t = advance();
            Expr rhs = parseUnary();
            requireSort(e, Sort::Arith, t);
            requireSort(rhs, Sort::Arith, t);
            e = t.type == TokType::Star ? mkMul(std::move(e), std::move(rhs))
                                        : mkDiv(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parseUnary() {
        if (peek().type == TokType::Minus) {
            const Token& t = advance();
            Expr e = parseUnary();
            requireSort(e, Sort::Arith, t);
            return mkNeg(std::move(e));
        }
        if (peek().type == TokType::Bang) {
            const Token& t = advance();
            Expr e = parseUnary();
            requireSort(e, Sort::Bool, t);
            return mkNot(std::move(e));
        }
        return parsePrimary();
    }

    Expr parsePrimary() {
        if (peek().type == TokType::Number) {
            const Token& t = advance();
            return constant(Rational::fromDecimal(t.text));
        }
        if (peek().type == TokType::LParen) {
            advance();
            Expr e = parseOr();
            expect(TokType::RParen, "')'");
            return e;
        }
        if (peek().type == TokType::Ident) {
            if (peek().text == "pow" && peek(1).type == TokType::LParen) {
                advance();
                advance();
                Expr base = parseExpr(Sort::Arith);
                expect(TokType::Comma, "','");
                const Token& expTok = expect(TokType::Number, "nonnegative integer exponent");
                Rational k = Rational::fromDecimal(expTok.text);
                if (!k.isInteger() || k.sign() < 0)
                    throw errAt("pow exponent must be a nonnegative integer literal", expTok);
                expect(TokType::RParen, "')'");
                return mkPow(std::move(base), k.num().convert_to<unsigned>());
            }
            const Token& t = advance();
            if (keywords().count(t.text))
                throw errAt("keyword '" + t.text + "' cannot appear in an expression", t);
            return variable(t.text);
        }
        throw err("expected an expression");
    }

    void requireSort(const Expr& e, Sort s, const Token& at) const {
        if (e->sort() != s)
            throw errAt(s == Sort::Bool ? "operand must be boolean" : "operand must be arithmetic", at);
    }
};

// ---- validation -----------------------------------------------------------------

inline void Parser::validate(const Program& p) {
    std::set<std::string> varNames;
    for (const auto& in : p.inputs)
        if (!varNames.insert(in.name).second)
            throw ParseError("duplicate declaration of " + in.name, 0, 0);
    for (const auto& g : p.globals)
        if (!varNames.insert(g).second)
            throw ParseError("duplicate declaration of " + g, 0, 0);
    std::set<std::string> funcNames;
    for (const auto& [n, b] : p.functions)
        if (!funcNames.insert(n).second)
            throw ParseError("duplicate function " + n, 0, 0);

    // Input assumptions may reference inputs declared up to that point only.
    std::set<std::string> seenInputs;
    for (const auto& in : p.inputs) {
        seenInputs.insert(in.name);
        for (const auto& a : in.assumes) {
            std::set<std::string> used;
            collectVars(a, used);
            for (const auto& v : used)
                if (!seenInputs.count(v))
                    throw ParseError("input assumption references " + v +
                                         " which is not an input declared before it",
                                     0, 0);
        }
    }

    std::set<std::string> assignable(p.globals.begin(), p.globals.end());

    // Scope-aware walk: loop indices are declared by their loop.
    struct Walker {
        const Program& p;
        const std::set<std::string>& varNames;
        const std::set<std::string>& assignable;
        std::vector<std::string> loopVars;

        void checkExpr(const Expr& e) {
            std::set<std::string> used;
            collectVars(e, used);
            for (const auto& v : used) {
                if (varNames.count(v)) continue;
                if (std::find(loopVars.begin(), loopVars.end(), v) != loopVars.end()) continue;
                throw ParseError("undeclared variable " + v, 0, 0);
            }
        }
        void checkTarget(const std::string& v, const char* what) {
            if (!assignable.count(v)) {
                if (varNames.count(v) ||
                    std::find(loopVars.begin(), loopVars.end(), v) != loopVars.end())
                    throw ParseError(std::string(what) + " target " + v + " is not assignable", 0, 0);
                throw ParseError("undeclared variable " + v, 0, 0);
            }
        }
        void walk(const Block& b) {
            for (const auto& s : b) walk(s);
        }
        void walk(const Stmt& s) {
            switch (s->kind) {
                case StmtKind::Assign:
                    checkTarget(s->var, "assignment");
                    checkExpr(s->expr);
                    break;
                case StmtKind::Havoc: checkTarget(s->var, "havoc"); break;
                case StmtKind::Assume:
                case StmtKind::Assert: checkExpr(s->expr); break;
                case StmtKind::If:
                    checkExpr(s->expr);
                    walk(s->body);
                    walk(s->elseBody);
                    break;
                case StmtKind::ChooseInt:
                    checkTarget(s->var, "choose");
                    checkExpr(s->expr);
                    break;
                case StmtKind::For: {
                    checkExpr(s->expr);
                    if (varNames.count(s->var) ||
                        std::find(loopVars.begin(), loopVars.end(), s->var) != loopVars.end())
                        throw ParseError("loop variable " + s->var + " shadows a declaration", 0, 0);
                    loopVars.push_back(s->var);
                    walk(s->body);
                    loopVars.pop_back();
                    break;
                }
                case StmtKind::Evolve: {
                    for (const auto& o : s->odes) {
                        checkTarget(o.var, "evolve");
                        checkExpr(o.rhs);
                    }
                    if (!varNames.count(s->dtVar))
                        throw ParseError("evolve references undeclared dt variable " + s->dtVar, 0, 0);
                    checkExpr(s->expr);
                    break;
                }
                case StmtKind::Call:
                    if (!p.findFunction(s->var))
                        throw ParseError("call to unknown function " + s->var, 0, 0);
                    break;
                case StmtKind::Print: break;
            }
        }
    };
    Walker w{p, varNames, assignable, {}};
    for (const auto& [n, b] : p.functions) w.walk(b);
    w.walk(p.mainBlock);

    // Call graph must be acyclic.
    enum class Mark { None, Active, Done };
    std::map<std::string, Mark> marks;
    auto callees = [&](const Block& b, auto&& self, std::vector<std::string>& out) -> void {
        for (const auto& s : b) {
            if (s->kind == StmtKind::Call) out.push_back(s->var);
            self(s->body, self, out);
            self(s->elseBody, self, out);
        }
    };
    auto visit = [&](const std::string& f, auto&& self) -> void {
        Mark& m = marks[f];
        if (m == Mark::Active) throw ParseError("recursive call cycle through " + f, 0, 0);
        if (m == Mark::Done) return;
        m = Mark::Active;
        std::vector<std::string> cs;
        callees(*p.findFunction(f), callees, cs);
        for (const auto& c : cs) self(c, self);
        m = Mark::Done;
    };
    for (const auto& [n, b] : p.functions) visit(n, visit);
}

}  // namespace detail

// ---- public front end --------------------------------------------------------

inline Program parseProgram(const std::string& text) {
    detail::Parser parser(text);
    return parser.parse();
}

inline void validateProgram(const Program& p) { detail::Parser::validate(p); }

// ---- printer ------------------------------------------------------------------

namespace detail {

inline void printBlock(const Block& b, std::string& out, int indent);

inline void printStmt(const Stmt& s, std::string& out, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    switch (s->kind) {
        case StmtKind::Assign:
            out += pad + s->var + " = " + toString(s->expr) + ";\n";
            break;
        case StmtKind::Havoc:
            out += pad + "havoc " + s->var + ";\n";
            break;
        case StmtKind::Assume:
            out += pad + "assume(" + toString(s->expr) + ");\n";
            break;
        case StmtKind::Assert:
            out += pad + "assert(" + toString(s->expr) + ")";
            if (!s->label.empty()) out += " : \"" + s->label + "\"";
            out += ";\n";
            break;
        case StmtKind::If:
            out += pad + "if (" + toString(s->expr) + ") {\n";
            printBlock(s->body, out, indent + 1);
            if (s->elseBody.empty()) {
                out += pad + "}\n";
            } else {
                out += pad + "} else {\n";
                printBlock(s->elseBody, out, indent + 1);
                out += pad + "}\n";
            }
            break;
        case StmtKind::ChooseInt:
            out += pad + s->var + " = choose(" + toString(s->expr) + ");\n";
            break;
        case StmtKind::For:
            out += pad + "for " + s->var + " in 0.." + toString(s->expr) + " {\n";
            printBlock(s->body, out, indent + 1);
            out += pad + "}\n";
            break;
        case StmtKind::Evolve: {
            out += pad + "evolve {";
            for (const auto& o : s->odes)
                out += " " + o.var + "' = " + toString(o.rhs) + ";";
            out += " } dt " + s->dtVar + " steps " + toString(s->expr) + ";\n";
            break;
        }
        case StmtKind::Call:
            out += pad + "call " + s->var + ";\n";
            break;
        case StmtKind::Print:
            out += pad + "print;\n";
            break;
    }
}

inline void printBlock(const Block& b, std::string& out, int indent) {
    for (const auto& s : b) printStmt(s, out, indent);
}

}  // namespace detail

inline std::string printProgram(const Program& p) {
    std::string out;
    for (const auto& in : p.inputs) {
        out += "input ";
        out += in.sort == VSort::Int ? "int " : "real ";
        out += in.name;
        if (!in.assumes.empty()) {
            out += " assume(";
            for (std::size_t i = 0; i < in.assumes.size(); ++i) {
                if (i) out += " && ";
                out += toString(in.assumes[i]);
            }
            out += ")";
        }
        out += ";\n";
    }
    for (const auto& g : p.globals) out += "var " + g + ";\n";
    for (const auto& [name, body] : p.functions) {
        out += "func " + name + " {\n";
        detail::printBlock(body, out, 1);
        out += "}\n";
    }
    out += "main {\n";
    detail::printBlock(p.mainBlock, out, 1);
    out += "}\n";
    return out;
}

// ---- Evolve lowering ------------------------------------------------------------

namespace detail {

struct LowerCtx {
    std::set<std::string> used;
    std::vector<std::string> newGlobals;
    bool hasClock = false;  // program declares a global named "t"
    int evolveOrdinal = 0;

    std::string fresh(const std::string& base) {
        std::string name = base;
        int k = 0;
        while (used.count(name)) name = base + "_" + std::to_string(k++);
        used.insert(name);
        return name;
    }
};

inline Block lowerBlock(const Block& b, LowerCtx& ctx);

inline void lowerStmt(const Stmt& s, LowerCtx& ctx, Block& out) {
    switch (s->kind) {
        case StmtKind::If: {
            StmtNode n = *s;
            n.body = lowerBlock(s->body, ctx);
            n.elseBody = lowerBlock(s->elseBody, ctx);
            out.push_back(mkStmt(std::move(n)));
            return;
        }
        case StmtKind::For: {
            StmtNode n = *s;
            n.body = lowerBlock(s->body, ctx);
            out.push_back(mkStmt(std::move(n)));
            return;
        }
        case StmtKind::Evolve: {
            int ord = ctx.evolveOrdinal++;
            std::string mVar = ctx.fresh("_m" + std::to_string(ord));
            std::string jVar = ctx.fresh("_j" + std::to_string(ord));
            ctx.newGlobals.push_back(mVar);

            Block body;
            // Clock advance: the conventional time variable `t` moves by dt
            // per step, exactly as in the reference discretization.
            bool odesTouchClock = false;
            for (const auto& o : s->odes)
                if (o.var == "t") odesTouchClock = true;
            if (ctx.hasClock && !odesTouchClock && s->dtVar != "t")
                body.push_back(stmtAssign("t", mkAdd(variable("t"), variable(s->dtVar))));

            if (s->odes.size() == 1) {
                const auto& o = s->odes.front();
                body.push_back(stmtAssign(
                    o.var, mkAdd(variable(o.var), mkMul(o.rhs, variable(s->dtVar)))));
            } else {
                // Simultaneous update: snapshot pre-step values so every
                // right-hand side reads the state at the start of the step.
                std::map<std::string, Expr> preStep;
                std::vector<std::pair<std::string, std::string>> snaps;
                for (const auto& o : s->odes) {
                    std::string sv = ctx.fresh("_s" + std::to_string(ord) + "_" + o.var);
                    ctx.newGlobals.push_back(sv);
                    snaps.emplace_back(o.var, sv);
                    preStep.emplace(o.var, variable(sv));
                }
                for (const auto& [v, sv] : snaps)
                    body.push_back(stmtAssign(sv, variable(v)));
                for (const auto& o : s->odes) {
                    Expr rhs = substituteVars(o.rhs, preStep);
                    body.push_back(stmtAssign(
                        o.var, mkAdd(variable(o.var), mkMul(rhs, variable(s->dtVar)))));
                }
            }

            out.push_back(stmtChoose(mVar, s->expr));
            out.push_back(stmtFor(jVar, variable(mVar), std::move(body)));
            return;
        }
        default:
            out.push_back(s);
            return;
    }
}

inline Block lowerBlock(const Block& b, LowerCtx& ctx) {
    Block out;
    for (const auto& s : b) lowerStmt(s, ctx, out);
    return out;
}

}  // namespace detail

/// Replaces every Evolve block with its explicit first-order scheme:
/// a nondeterministic step count m = choose(bound) followed by a loop of
/// m Euler updates v += rhs * dt (advancing the global clock `t` when the
/// program declares one). Programs without Evolve come back unchanged.
inline Program lowerEvolve(const Program& p) {
    detail::LowerCtx ctx;
    for (const auto& in : p.inputs) ctx.used.insert(in.name);
    for (const auto& g : p.globals) ctx.used.insert(g);
    for (const auto& [n, b] : p.functions) ctx.used.insert(n);
    ctx.hasClock = p.isGlobal("t");

    Program q;
    q.inputs = p.inputs;
    q.globals = p.globals;
    for (const auto& [n, b] : p.functions)
        q.functions.emplace_back(n, detail::lowerBlock(b, ctx));
    q.mainBlock = detail::lowerBlock(p.mainBlock, ctx);
    for (auto& g : ctx.newGlobals) q.globals.push_back(std::move(g));
    validateProgram(q);
    return q;
}

/// True if any statement in the program is an Evolve block.
inline bool containsEvolve(const Block& b) {
    for (const auto& s : b) {
        if (s->kind == StmtKind::Evolve) return true;
        if (containsEvolve(s->body) || containsEvolve(s->elseBody)) return true;
    }
    return false;
}

inline bool containsEvolve(const Program& p) {
    for (const auto& [n, b] : p.functions)
        if (containsEvolve(b)) return true;
    return containsEvolve(p.mainBlock);
}

}  // namespace esmck::ir
