// Compiled fast path for canonical SMILES and Morgan fingerprints.
//
// Mirrors the pure-Python reference (chem.smiles, chem.valence, canon,
// descriptors) for the common case. Anything outside that case (parse
// errors, invalid molecules, non-tetrahedral chirality classes, non-ASCII
// input, an exhausted matching budget) returns None so the caller falls back
// to the reference, which also produces the structured error.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace py = pybind11;

namespace {

constexpr int H_SLOT = -1;
constexpr int SINGLE = 1, DOUBLE = 2, TRIPLE = 3, AROMATIC = 4;
constexpr int MATCH_BUDGET = 1000000;

// ---------------------------------------------------------------------------
// element tables, filled from Python by configure()

struct Tables {
    std::vector<std::string> symbols;  // index = atomic number
    std::unordered_map<std::string, int> by_symbol;
    std::vector<std::vector<int>> valences;
    std::vector<bool> organic;
    std::map<std::pair<int, int>, std::vector<int>> charged;
    bool ready = false;
};

Tables T;

const std::vector<int>& allowed_valences(int z, int charge) {
    if (charge != 0) {
        auto it = T.charged.find({z, charge});
        if (it != T.charged.end()) return it->second;
    }
    return T.valences[z];
}

bool plain_aromatic(int z) {
    return z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16;
}

// ---------------------------------------------------------------------------
// molecule

struct Atom {
    int z = 0;
    int iso = -1;  // -1: none
    int charge = 0;
    int eh = -1;  // explicit hydrogens, -1 for organic-subset atoms
    bool arom = false;
    int chir = 0;  // 0 none, 1 '@', 2 '@@'
};

struct Bond {
    int a, b, order, dir;  // dir 0 none, 1 '/', 2 '\'
};

using Edge = std::pair<int, int>;  // (neighbour, bond index)

struct Span {
    const Edge* first;
    const Edge* last;
    const Edge* begin() const { return first; }
    const Edge* end() const { return last; }
    size_t size() const { return last - first; }
    const Edge& operator[](size_t i) const { return first[i]; }
};

struct Mol {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;
    std::vector<std::vector<int>> stereo;
    std::vector<char> chiral;
    // adjacency in CSR form; each atom's edges follow bond-index order
    std::vector<int> adj_off;
    std::vector<Edge> adj_nb;
    Span nbrs(int v) const { return {adj_nb.data() + adj_off[v], adj_nb.data() + adj_off[v + 1]}; }
    int degree(int v) const { return adj_off[v + 1] - adj_off[v]; }
    std::vector<int> hs;
    std::vector<char> ring_bond;
    std::vector<char> ring_atom;
    std::vector<int> total;   // bond-order sum, aromatic counted as 1
    std::vector<int> n_arom;  // aromatic bond count
};

void build_adjacency(Mol& m) {
    int n = m.atoms.size();
    m.adj_off.assign(n + 1, 0);
    for (const Bond& b : m.bonds) {
        m.adj_off[b.a + 1]++;
        m.adj_off[b.b + 1]++;
    }
    for (int i = 0; i < n; ++i) m.adj_off[i + 1] += m.adj_off[i];
    m.adj_nb.resize(m.adj_off[n]);
    std::vector<int> fill(m.adj_off.begin(), m.adj_off.end() - 1);
    for (int k = 0; k < (int)m.bonds.size(); ++k) {
        const Bond& b = m.bonds[k];
        m.adj_nb[fill[b.a]++] = {b.b, k};
        m.adj_nb[fill[b.b]++] = {b.a, k};
    }
}

void find_ring_bonds(Mol& m) {
    int n = m.atoms.size();
    std::vector<int> disc(n, -1), low(n, 0);
    std::vector<char> bridge(m.bonds.size(), 0);
    struct Frame {
        int v, via;
        size_t next;
    };
    std::vector<Frame> stack;
    int t = 0;
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        disc[root] = low[root] = t++;
        stack.push_back({root, -1, 0});
        while (!stack.empty()) {
            Frame& f = stack.back();
            int v = f.v;
            bool advanced = false;
            Span nb = m.nbrs(v);
            while (f.next < nb.size()) {
                auto [w, k] = nb[f.next++];
                if (k == f.via) continue;
                if (disc[w] == -1) {
                    disc[w] = low[w] = t++;
                    stack.push_back({w, k, 0});
                    advanced = true;
                    break;
                }
                low[v] = std::min(low[v], disc[w]);
            }
            if (advanced) continue;
            int via = f.via;
            stack.pop_back();
            if (!stack.empty()) {
                int u = stack.back().v;
                low[u] = std::min(low[u], low[v]);
                if (low[v] > disc[u]) bridge[via] = 1;
            }
        }
    }
    m.ring_bond.assign(m.bonds.size(), 0);
    m.ring_atom.assign(n, 0);
    for (size_t k = 0; k < m.bonds.size(); ++k) {
        if (!bridge[k]) {
            m.ring_bond[k] = 1;
            m.ring_atom[m.bonds[k].a] = 1;
            m.ring_atom[m.bonds[k].b] = 1;
        }
    }
}

void compute_hydrogens(Mol& m) {
    int n = m.atoms.size();
    m.total.assign(n, 0);
    m.n_arom.assign(n, 0);
    for (const Bond& b : m.bonds) {
        int o = b.order == AROMATIC ? 1 : b.order;
        m.total[b.a] += o;
        m.total[b.b] += o;
        if (b.order == AROMATIC) {
            m.n_arom[b.a]++;
            m.n_arom[b.b]++;
        }
    }
    m.hs.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        const Atom& a = m.atoms[i];
        if (a.eh >= 0) {
            m.hs[i] = a.eh;
            continue;
        }
        int t = m.total[i];
        int h = 0;
        for (int v : T.valences[a.z]) {
            if (v >= t) {
                h = v - t;
                if (a.arom && h > 0 && m.n_arom[i]) h -= 1;
                break;
            }
        }
        m.hs[i] = h;
    }
}

// ---------------------------------------------------------------------------
// parser

int bond_order(char c) {
    switch (c) {
        case '=': return DOUBLE;
        case '#': return TRIPLE;
        case ':': return AROMATIC;
        default: return SINGLE;
    }
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

// Bracket atom body (between '[' and ']'); false on anything unusual.
bool parse_bracket(const std::string& s, size_t p, size_t end, Atom& atom) {
    size_t q = p;
    while (q < end && is_digit(s[q])) ++q;
    if (q - p > 4) return false;
    if (q > p) atom.iso = std::stoi(s.substr(p, q - p));
    p = q;
    if (p >= end) return false;
    std::string sym;
    if (is_upper(s[p])) {
        sym = s.substr(p, 1);
        ++p;
        if (p < end && is_lower(s[p])) {
            sym += s[p];
            ++p;
        }
    } else {
        std::string two = s.substr(p, 2);
        if (two == "se" || two == "as" || two == "te") {
            sym = two;
            p += 2;
        } else if (std::strchr("bcnops", s[p]) != nullptr) {
            sym = s.substr(p, 1);
            ++p;
        } else {
            return false;
        }
        atom.arom = true;
        sym[0] = sym[0] - 'a' + 'A';
    }
    auto it = T.by_symbol.find(sym);
    if (it == T.by_symbol.end()) return false;
    atom.z = it->second;
    if (p < end && s[p] == '@') {
        ++p;
        atom.chir = 1;
        if (p < end && s[p] == '@') {
            ++p;
            atom.chir = 2;
        }
        if (p < end && std::strchr("TASO", s[p]) != nullptr) return false;
    }
    atom.eh = 0;
    if (p < end && s[p] == 'H') {
        ++p;
        atom.eh = 1;
        if (p < end && is_digit(s[p])) {
            atom.eh = s[p] - '0';
            ++p;
        }
    }
    if (p < end && (s[p] == '+' || s[p] == '-')) {
        char sign = s[p];
        ++p;
        if (p < end && s[p] == sign) {
            ++p;
            atom.charge = sign == '+' ? 2 : -2;
        } else {
            size_t d = p;
            while (d < end && is_digit(s[d]) && d - p < 2) ++d;
            int mag = d > p ? std::stoi(s.substr(p, d - p)) : 1;
            p = d;
            atom.charge = sign == '+' ? mag : -mag;
        }
    }
    if (p < end && s[p] == ':') {
        ++p;
        size_t d = p;
        while (d < end && is_digit(s[d])) ++d;
        if (d == p || d - p > 6) return false;
        p = d;  // atom maps are not part of the canonical form
    }
    return p == end;
}

struct Parser {
    const std::string& s;
    Mol& m;
    std::unordered_set<uint64_t> pairs;
    Parser(const std::string& text, Mol& mol) : s(text), m(mol) {}

    bool add_bond(int i, int j, char sym, int opener) {
        if (i == j) return false;
        uint64_t key = i < j ? ((uint64_t)i << 32 | (uint32_t)j) : ((uint64_t)j << 32 | (uint32_t)i);
        if (!pairs.insert(key).second) return false;
        bool both = m.atoms[i].arom && m.atoms[j].arom;
        int order, dir = 0;
        if (sym == 0) {
            order = both ? AROMATIC : SINGLE;
        } else {
            order = bond_order(sym);
            if (sym == '/') dir = 1;
            if (sym == '\\') dir = 2;
            if (order == AROMATIC && !both) return false;
        }
        m.bonds.push_back({i, j, order, dir});
        if (m.chiral[i] && i != opener) m.stereo[i].push_back(j);
        if (m.chiral[j] && j != opener) m.stereo[j].push_back(i);
        return true;
    }

    bool run() {
        size_t n = s.size();
        if (n == 0) return false;
        for (char c : s) {
            unsigned char u = (unsigned char)c;
            if (u < 0x21 || u > 0x7e) return false;
        }
        struct Ring {
            int key, atom;
            char sym;
        };
        std::vector<Ring> rings;
        std::vector<int> branches;
        int prev = -1;
        char pending = 0;
        int last = 0;  // 0 start, 1 atom, 2 bond, 3 ring, 4 open, 5 close, 6 dot
        size_t p = 0;
        while (p < n) {
            char c = s[p];
            Atom atom;
            bool is_atom = true;
            if (c == 'C') {
                if (p + 1 < n && s[p + 1] == 'l') {
                    atom.z = 17;
                    p += 2;
                } else {
                    atom.z = 6;
                    p += 1;
                }
            } else if (c == 'B') {
                if (p + 1 < n && s[p + 1] == 'r') {
                    atom.z = 35;
                    p += 2;
                } else {
                    atom.z = 5;
                    p += 1;
                }
            } else if (c == 'N') {
                atom.z = 7, p += 1;
            } else if (c == 'O') {
                atom.z = 8, p += 1;
            } else if (c == 'P') {
                atom.z = 15, p += 1;
            } else if (c == 'S') {
                atom.z = 16, p += 1;
            } else if (c == 'F') {
                atom.z = 9, p += 1;
            } else if (c == 'I') {
                atom.z = 53, p += 1;
            } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
                static const int zs[] = {5, 6, 7, 8, 15, 16};
                atom.z = zs[std::strchr("bcnops", c) - "bcnops"];
                atom.arom = true;
                p += 1;
            } else if (c == '[') {
                size_t q = p + 1;
                while (q < n && s[q] != ']' && s[q] != '[') ++q;
                if (q >= n || s[q] != ']') return false;
                if (!parse_bracket(s, p + 1, q, atom)) return false;
                p = q + 1;
            } else {
                is_atom = false;
            }
            if (is_atom) {
                int idx = m.atoms.size();
                m.atoms.push_back(atom);
                m.chiral.push_back(atom.chir != 0);
                m.stereo.emplace_back();
                if (prev >= 0) {
                    if (!add_bond(prev, idx, pending, -1)) return false;
                } else if (pending) {
                    return false;
                }
                if (atom.chir && atom.eh > 0) m.stereo[idx].push_back(H_SLOT);
                pending = 0;
                prev = idx;
                last = 1;
                continue;
            }
            if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
                if (!(last == 1 || last == 3 || last == 4 || last == 5) || pending) return false;
                pending = c;
                last = 2;
                p += 1;
            } else if (is_digit(c) || c == '%') {
                int key;
                if (c == '%') {
                    if (p + 2 >= n || !is_digit(s[p + 1]) || !is_digit(s[p + 2])) return false;
                    key = 100 + (s[p + 1] - '0') * 10 + (s[p + 2] - '0');
                    p += 3;
                } else {
                    key = c - '0';
                    p += 1;
                }
                if (prev < 0 || !(last == 1 || last == 2 || last == 3)) return false;
                auto it = std::find_if(rings.begin(), rings.end(), [&](const Ring& r) { return r.key == key; });
                if (it != rings.end()) {
                    int j = it->atom;
                    char sym = it->sym;
                    rings.erase(it);
                    if (sym && pending && bond_order(sym) != bond_order(pending)) return false;
                    if (m.chiral[j]) {
                        for (int& r : m.stereo[j]) {
                            if (r == -2 - key) {
                                r = prev;
                                break;
                            }
                        }
                    }
                    bool ok = sym ? add_bond(j, prev, sym, j) : add_bond(prev, j, pending, j);
                    if (!ok) return false;
                } else {
                    rings.push_back({key, prev, pending});
                    if (m.chiral[prev]) m.stereo[prev].push_back(-2 - key);
                }
                pending = 0;
                last = 3;
            } else if (c == '(') {
                if (prev < 0 || pending || last == 4) return false;
                branches.push_back(prev);
                last = 4;
                p += 1;
            } else if (c == ')') {
                if (branches.empty() || last == 2 || last == 4) return false;
                prev = branches.back();
                branches.pop_back();
                last = 5;
                p += 1;
            } else if (c == '.') {
                if (last == 0 || last == 2 || last == 4 || last == 6 || !branches.empty()) return false;
                prev = -1;
                last = 6;
                p += 1;
            } else {
                return false;
            }
        }
        if (!branches.empty() || pending || last == 6 || !rings.empty()) return false;
        return true;
    }
};

bool parse(const std::string& text, Mol& m) {
    if (!T.ready) return false;
    Parser parser(text, m);
    if (!parser.run()) return false;
    build_adjacency(m);
    find_ring_bonds(m);
    // aromatic bonds outside rings are single bonds
    for (size_t k = 0; k < m.bonds.size(); ++k) {
        if (m.bonds[k].order == AROMATIC && !m.ring_bond[k]) m.bonds[k].order = SINGLE;
    }
    compute_hydrogens(m);
    return true;
}

// ---------------------------------------------------------------------------
// validity: kekulizability plus the valence ceiling

struct Matcher {
    const std::vector<std::vector<int>>& cand;
    const std::vector<int>& comp;
    std::vector<int>& mate;
    long steps = 0;
    Matcher(const std::vector<std::vector<int>>& c, const std::vector<int>& cp, std::vector<int>& mt)
        : cand(c), comp(cp), mate(mt) {}

    // 1 found, 0 impossible, -1 budget exhausted
    int rec(size_t p) {
        while (p < comp.size() && mate[comp[p]] >= 0) ++p;
        if (p == comp.size()) return 1;
        int v = comp[p];
        for (int w : cand[v]) {
            if (mate[w] >= 0) continue;
            if (++steps > MATCH_BUDGET) return -1;
            mate[v] = w;
            mate[w] = v;
            int r = rec(p + 1);
            if (r != 0) return r;
            mate[v] = mate[w] = -1;
        }
        return 0;
    }
};

// 1 valid, 0 invalid, -1 undecided
int check_valid(const Mol& m) {
    int n = m.atoms.size();
    std::vector<char> needs(n, 0);
    bool any_arom = false;
    for (const Atom& a : m.atoms) any_arom |= a.arom;
    if (any_arom) {
        for (int i = 0; i < n; ++i) {
            const Atom& a = m.atoms[i];
            if (!a.arom) continue;
            int base = m.total[i] + m.hs[i];
            for (int v : allowed_valences(a.z, a.charge)) {
                if (v >= base) {
                    needs[i] = v > base;
                    break;
                }
            }
        }
        std::vector<std::vector<int>> cand(n);
        for (const Bond& b : m.bonds) {
            if (b.order == AROMATIC && needs[b.a] && needs[b.b]) {
                cand[b.a].push_back(b.b);
                cand[b.b].push_back(b.a);
            }
        }
        for (auto& c : cand) std::sort(c.begin(), c.end());
        std::vector<char> seen(n, 0);
        std::vector<int> mate(n, -1);
        for (int start = 0; start < n; ++start) {
            if (!needs[start] || seen[start]) continue;
            std::vector<int> comp, stack{start};
            seen[start] = 1;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                comp.push_back(v);
                for (int w : cand[v]) {
                    if (!seen[w]) {
                        seen[w] = 1;
                        stack.push_back(w);
                    }
                }
            }
            if (comp.size() % 2) return 0;
            std::sort(comp.begin(), comp.end());
            Matcher matcher(cand, comp, mate);
            int r = matcher.rec(0);
            if (r != 1) return r;
        }
    }
    for (int i = 0; i < n; ++i) {
        const Atom& a = m.atoms[i];
        const auto& vals = allowed_valences(a.z, a.charge);
        if (vals.empty()) continue;
        if (m.total[i] + needs[i] + m.hs[i] > vals.back()) return 0;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// writer

void append_ring_label(std::string& out, int d) {
    if (d >= 10) out += '%';
    out += std::to_string(d);
}

void append_bond(std::string& out, const Mol& m, int k, int src) {
    const Bond& b = m.bonds[k];
    if (b.dir) {
        out += (b.dir == 1) == (src == b.a) ? '/' : '\\';
        return;
    }
    switch (b.order) {
        case SINGLE:
            if (m.atoms[b.a].arom && m.atoms[b.b].arom) out += '-';
            return;
        case DOUBLE: out += '='; return;
        case TRIPLE: out += '#'; return;
        default: return;
    }
}

// Hydrogens a reader infers for an unbracketed atom, or -1 if it needs brackets.
int plain_hydrogens(const Mol& m, int i) {
    const Atom& a = m.atoms[i];
    if (!T.organic[a.z]) return -1;
    if (a.arom && !plain_aromatic(a.z)) return -1;
    int total = m.total[i];
    int n_arom = m.n_arom[i];
    for (int v : T.valences[a.z]) {
        if (v >= total) {
            if (a.arom && n_arom && v > total) return v - total - 1;
            return v - total;
        }
    }
    return 0;
}

void atom_token(const Mol& m, int i, int chir, std::string& out) {
    const Atom& a = m.atoms[i];
    std::string sym = T.symbols[a.z];
    if (a.arom)
        for (char& ch : sym) ch = std::tolower(ch);
    int h = m.hs[i];
    if (a.iso < 0 && a.charge == 0 && chir == 0 && plain_hydrogens(m, i) == h) {
        out += sym;
        return;
    }
    out += '[';
    if (a.iso >= 0) out += std::to_string(a.iso);
    out += sym;
    if (chir == 1) out += '@';
    if (chir == 2) out += "@@";
    if (h) {
        out += 'H';
        if (h != 1) out += std::to_string(h);
    }
    if (a.charge) {
        out += a.charge > 0 ? '+' : '-';
        int q = std::abs(a.charge);
        if (q != 1) out += std::to_string(q);
    }
    out += ']';
}

int permutation_parity(const std::vector<int>& src, const std::vector<int>& dst) {
    int n = src.size();
    std::vector<int> perm(n);
    for (int k = 0; k < n; ++k) perm[k] = std::find(src.begin(), src.end(), dst[k]) - src.begin();
    std::vector<char> seen(n, 0);
    int parity = 0;
    for (int k = 0; k < n; ++k) {
        if (seen[k]) continue;
        int len = 0;
        for (int j = k; !seen[j]; j = perm[j]) {
            seen[j] = 1;
            ++len;
        }
        parity ^= (len - 1) & 1;
    }
    return parity;
}

int restate_chirality(const Mol& m, int v, const std::vector<int>& nbr_out, bool is_first) {
    int chir = m.atoms[v].chir;
    const auto& refs = m.stereo[v];
    std::vector<int> order(nbr_out);
    if (std::find(refs.begin(), refs.end(), H_SLOT) != refs.end())
        order.insert(order.begin() + (is_first ? 0 : 1), H_SLOT);
    std::vector<int> a(order), b(refs);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return chir;
    if (permutation_parity(refs, order)) return chir == 1 ? 2 : 1;
    return chir;
}

// Writes one connected component from a priority order of its atoms.
// Buffers are reused between calls on the same molecule.
class Writer {
   public:
    explicit Writer(const Mol& mol) : m(mol) {
        int n = m.atoms.size();
        prio.assign(n, -1);
        visited.assign(n, 0);
        parent_bond.assign(n, -1);
        emitted_rank.assign(n, 0);
        first_child.assign(n, -1);
        last_child.assign(n, -1);
        next_sibling.assign(n, -1);
        sorted_nb = m.adj_nb;
        tree.assign(m.bonds.size(), 0);
        open_rings.assign(m.bonds.size(), -1);
    }

    std::string write(const std::vector<int>& order) {
        for (size_t r = 0; r < order.size(); ++r) {
            int v = order[r];
            prio[v] = r;
            visited[v] = 0;
            parent_bond[v] = -1;
            first_child[v] = last_child[v] = next_sibling[v] = -1;
        }
        for (int v : order) {
            Edge* b = sorted_nb.data() + m.adj_off[v];
            Edge* e = sorted_nb.data() + m.adj_off[v + 1];
            std::sort(b, e, [&](const Edge& x, const Edge& y) { return prio[x.first] < prio[y.first]; });
            for (Edge* p = b; p != e; ++p) {
                tree[p->second] = 0;
                open_rings[p->second] = -1;
            }
        }
        // pass 1: DFS spanning forest; other bonds become ring closures
        roots.clear();
        int rank = 0;
        for (int s : order) {
            if (visited[s]) continue;
            roots.push_back(s);
            visited[s] = 1;
            emitted_rank[s] = rank++;
            dfs.clear();
            dfs.push_back({s, m.adj_off[s]});
            while (!dfs.empty()) {
                auto& [v, next] = dfs.back();
                bool advanced = false;
                while (next < m.adj_off[v + 1]) {
                    auto [w, k] = sorted_nb[next++];
                    if (k == parent_bond[v]) continue;
                    if (!visited[w]) {
                        visited[w] = 1;
                        emitted_rank[w] = rank++;
                        parent_bond[w] = k;
                        tree[k] = 1;
                        if (last_child[v] < 0)
                            first_child[v] = w;
                        else
                            next_sibling[last_child[v]] = w;
                        last_child[v] = w;
                        dfs.push_back({w, m.adj_off[w]});
                        advanced = true;
                        break;
                    }
                }
                if (!advanced) dfs.pop_back();
            }
        }

        // pass 2: emit
        std::string out;
        out.reserve(order.size() * 3);
        std::priority_queue<int, std::vector<int>, std::greater<int>> free_digits;
        int next_digit = 1;
        for (size_t ci = 0; ci < roots.size(); ++ci) {
            if (ci) out += '.';
            items.push_back({0, roots[ci], -1});
            while (!items.empty()) {
                Item it = items.back();
                items.pop_back();
                if (it.kind == 1) {
                    out += '(';
                    continue;
                }
                if (it.kind == 2) {
                    out += ')';
                    continue;
                }
                int v = it.v, from = it.from;
                if (from >= 0) append_bond(out, m, parent_bond[v], from);
                nbr_out.clear();
                if (from >= 0) nbr_out.push_back(from);
                ring_part.clear();
                int rank_v = emitted_rank[v];
                closes.clear();
                opens.clear();
                for (const Edge& e : m.nbrs(v)) {
                    if (tree[e.second]) continue;
                    if (emitted_rank[e.first] < rank_v)
                        closes.push_back(e);
                    else
                        opens.push_back(e);
                }
                if (opens.size() > 1)
                    std::sort(opens.begin(), opens.end(), [&](const Edge& x, const Edge& y) { return prio[x.first] < prio[y.first]; });
                if (closes.size() > 1)
                    std::sort(closes.begin(), closes.end(), [&](const Edge& x, const Edge& y) { return open_rings[x.second] < open_rings[y.second]; });
                freed.clear();
                for (const auto& [w, k] : closes) {
                    int d = open_rings[k];
                    open_rings[k] = -1;
                    append_ring_label(ring_part, d);
                    freed.push_back(d);
                    nbr_out.push_back(w);
                }
                for (const auto& [w, k] : opens) {
                    int d;
                    if (!free_digits.empty()) {
                        d = free_digits.top();
                        free_digits.pop();
                    } else {
                        d = next_digit++;
                    }
                    open_rings[k] = d;
                    append_bond(ring_part, m, k, v);
                    append_ring_label(ring_part, d);
                    nbr_out.push_back(w);
                }
                for (int d : freed) free_digits.push(d);
                kids.clear();
                for (int w = first_child[v]; w >= 0; w = next_sibling[w]) {
                    kids.push_back(w);
                    nbr_out.push_back(w);
                }
                int chir = m.atoms[v].chir;
                if (chir) chir = restate_chirality(m, v, nbr_out, from < 0);
                atom_token(m, v, chir, out);
                out += ring_part;
                for (int idx = (int)kids.size() - 1; idx >= 0; --idx) {
                    int w = kids[idx];
                    if (idx < (int)kids.size() - 1) {
                        items.push_back({2, -1, -1});
                        items.push_back({0, w, v});
                        items.push_back({1, -1, -1});
                    } else {
                        items.push_back({0, w, v});
                    }
                }
            }
        }
        return out;
    }

   private:
    struct Item {
        int kind;  // 0 atom, 1 '(', 2 ')'
        int v, from;
    };
    const Mol& m;
    std::vector<int> prio, parent_bond, emitted_rank, open_rings, first_child, last_child, next_sibling;
    std::vector<char> visited, tree;
    std::vector<Edge> sorted_nb, closes, opens;
    std::vector<std::pair<int, int>> dfs;
    std::vector<int> roots, nbr_out, freed, kids;
    std::vector<Item> items;
    std::string ring_part;
};

// ---------------------------------------------------------------------------
// canonical ranking

using Nbrs = std::vector<std::vector<std::pair<int, int>>>;

template <class Key>
int dense_ranks(const std::vector<Key>& keys, std::vector<int>& out) {
    int n = keys.size();
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
    out.assign(n, 0);
    int r = -1;
    for (int k = 0; k < n; ++k) {
        if (k == 0 || keys[idx[k - 1]] < keys[idx[k]]) ++r;
        out[idx[k]] = r;
    }
    return r + 1;
}

// Split classes by the sorted (neighbour class, bond order) multiset until
// stable. Keys are compared in the same order as the reference's tuples:
// old class first, then the sorted pairs, each pair packed as class*8+order.
int refine(std::vector<int>& ranks, const Nbrs& nbrs, int n_classes) {
    int n = ranks.size();
    if (n_classes >= n) return n_classes;
    std::vector<int> offset(n + 1, 0);
    for (int i = 0; i < n; ++i) offset[i + 1] = offset[i] + 1 + nbrs[i].size();
    std::vector<int> buf(offset[n]);
    std::vector<int> idx(n), fresh(n);
    auto less = [&](int a, int b) {
        return std::lexicographical_compare(buf.begin() + offset[a], buf.begin() + offset[a + 1],
                                            buf.begin() + offset[b], buf.begin() + offset[b + 1]);
    };
    while (n_classes < n) {
        for (int i = 0; i < n; ++i) {
            int* key = &buf[offset[i]];
            key[0] = ranks[i];
            int m = 1;
            for (const auto& [j, o] : nbrs[i]) key[m++] = ranks[j] * 8 + o;
            std::sort(key + 1, key + m);
            idx[i] = i;
        }
        std::sort(idx.begin(), idx.end(), less);
        int r = 0;
        fresh[idx[0]] = 0;
        for (int k = 1; k < n; ++k) {
            if (less(idx[k - 1], idx[k])) ++r;
            fresh[idx[k]] = r;
        }
        if (r + 1 == n_classes) break;
        n_classes = r + 1;
        ranks.swap(fresh);
    }
    return n_classes;
}

// Stereo marks restated against rank order: chiral atoms as (0, rank, mark)
// with neighbours by rank and an implicit H first, directed bonds as
// (1, low rank, high rank, direction read low to high). Sorted and flattened.
class StereoKey {
   public:
    StereoKey(const Mol& m, const std::vector<int>& atoms, const std::vector<int>& local) : m(m), local(local) {
        for (int a : atoms) {
            if (m.atoms[a].chir) chiral.push_back(a);
            for (const auto& [j, b] : m.nbrs(a))
                if (m.bonds[b].dir && m.bonds[b].a == a) directed.push_back(b);
        }
    }
    bool empty() const { return chiral.empty() && directed.empty(); }

    std::vector<int> operator()(const std::vector<int>& ranks) const {
        std::vector<std::array<int, 4>> entries;
        std::vector<int> order;
        for (int a : chiral) {
            int chir = m.atoms[a].chir;
            const auto& refs = m.stereo[a];
            if (!refs.empty()) {
                order.clear();
                for (const auto& [j, b] : m.nbrs(a)) order.push_back(j);
                std::sort(order.begin(), order.end(),
                          [&](int x, int y) { return ranks[local[x]] < ranks[local[y]]; });
                if (std::find(refs.begin(), refs.end(), H_SLOT) != refs.end()) order.insert(order.begin(), H_SLOT);
                std::vector<int> p(order), q(refs);
                std::sort(p.begin(), p.end());
                std::sort(q.begin(), q.end());
                if (p == q && permutation_parity(refs, order)) chir = 3 - chir;
            }
            entries.push_back({0, ranks[local[a]], chir, 0});
        }
        for (int k : directed) {
            const Bond& b = m.bonds[k];
            int ra = ranks[local[b.a]], rb = ranks[local[b.b]];
            if (ra < rb)
                entries.push_back({1, ra, rb, b.dir});
            else
                entries.push_back({1, rb, ra, 3 - b.dir});
        }
        std::sort(entries.begin(), entries.end());
        std::vector<int> out;
        for (const auto& e : entries) out.insert(out.end(), e.begin(), e.begin() + (e[0] == 0 ? 3 : 4));
        return out;
    }

   private:
    const Mol& m;
    const std::vector<int>& local;
    std::vector<int> chiral, directed;
};

class Search {
   public:
    Search(const std::vector<int>& codes, const Nbrs& nbrs, const StereoKey* tiebreak)
        : codes(codes), nbrs(nbrs), n(codes.size()), tiebreak(tiebreak) {}

    std::vector<int> best_ranks;

    void run(std::vector<int> ranks, int n_classes) {
        std::vector<int> prefix;
        explore(ranks, n_classes, prefix);
    }

   private:
    const std::vector<int>& codes;
    const Nbrs& nbrs;
    int n;
    const StereoKey* tiebreak;
    bool have = false;
    std::vector<int64_t> first_cert, best_cert;
    std::vector<int> first_ranks;
    std::vector<int> first_key, best_key;
    std::vector<std::vector<int>> autos;

    // Atom codes in rank order followed by the sorted (rank, rank, order)
    // edge triples, packed so that integer order is tuple order.
    std::vector<int64_t> certificate(const std::vector<int>& ranks) const {
        std::vector<int64_t> cert(n);
        for (int i = 0; i < n; ++i) cert[ranks[i]] = codes[i];
        size_t start = cert.size();
        for (int i = 0; i < n; ++i) {
            for (const auto& [j, o] : nbrs[i]) {
                if (ranks[i] < ranks[j]) cert.push_back(((int64_t)ranks[i] * n + ranks[j]) * 8 + o);
            }
        }
        std::sort(cert.begin() + start, cert.end());
        return cert;
    }

    void record_automorphism(const std::vector<int>& ref_ranks, const std::vector<int>& ranks) {
        std::vector<int> inv(n);
        for (int i = 0; i < n; ++i) inv[ref_ranks[i]] = i;
        std::vector<int> gamma(n);
        for (int x = 0; x < n; ++x) gamma[x] = inv[ranks[x]];
        autos.push_back(std::move(gamma));
    }

    void leaf(const std::vector<int>& ranks) {
        std::vector<int64_t> cert = certificate(ranks);
        std::vector<int> key;
        if (tiebreak && (!have || cert <= best_cert || cert == first_cert)) key = (*tiebreak)(ranks);
        if (!have) {
            have = true;
            first_cert = best_cert = cert;
            first_key = best_key = key;
            first_ranks = best_ranks = ranks;
            return;
        }
        if (cert == first_cert && key == first_key) {
            record_automorphism(first_ranks, ranks);
            return;
        }
        if (cert == best_cert && key == best_key) {
            record_automorphism(best_ranks, ranks);
            return;
        }
        if (cert < best_cert || (cert == best_cert && key < best_key)) {
            best_cert = std::move(cert);
            best_key = std::move(key);
            best_ranks = ranks;
        }
    }

    bool equivalent(int v, const std::vector<int>& explored, const std::vector<int>& prefix) const {
        std::vector<int> parent(n);
        for (int i = 0; i < n; ++i) parent[i] = i;
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x];
            return x;
        };
        for (const auto& gamma : autos) {
            bool fixes = true;
            for (int p : prefix) {
                if (gamma[p] != p) {
                    fixes = false;
                    break;
                }
            }
            if (!fixes) continue;
            for (int x = 0; x < n; ++x) {
                if (gamma[x] != x) {
                    int rx = find(x), ry = find(gamma[x]);
                    if (rx != ry) parent[std::max(rx, ry)] = std::min(rx, ry);
                }
            }
        }
        int rv = find(v);
        for (int u : explored)
            if (find(u) == rv) return true;
        return false;
    }

    void explore(const std::vector<int>& ranks, int n_classes, std::vector<int>& prefix) {
        if (n_classes == n) {
            leaf(ranks);
            return;
        }
        std::vector<int> counts(n, 0);
        for (int r : ranks) counts[r]++;
        int target = 0;
        while (counts[target] <= 1) ++target;
        std::vector<int> cell;
        for (int i = 0; i < n; ++i)
            if (ranks[i] == target) cell.push_back(i);
        std::vector<int> explored;
        std::vector<int> child, dense;
        for (int v : cell) {
            if (!explored.empty() && equivalent(v, explored, prefix)) continue;
            explored.push_back(v);
            child.resize(n);
            for (int i = 0; i < n; ++i) child[i] = 2 * ranks[i];
            child[v] -= 1;
            int k = dense_ranks(child, dense);
            k = refine(dense, nbrs, k);
            prefix.push_back(v);
            explore(dense, k, prefix);
            prefix.pop_back();
        }
    }
};

using Invariant = std::array<int, 7>;

std::vector<std::vector<int>> fragments(const Mol& m) {
    int n = m.atoms.size();
    std::vector<char> seen(n, 0);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        seen[s] = 1;
        std::vector<int> comp{s}, stack{s};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (const auto& [w, k] : m.nbrs(v)) {
                if (!seen[w]) {
                    seen[w] = 1;
                    comp.push_back(w);
                    stack.push_back(w);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

std::string label_and_write(const Mol& m, const std::vector<int>& atoms, Writer& writer) {
    int size = atoms.size();
    std::vector<int> local(m.atoms.size(), -1);
    for (int k = 0; k < size; ++k) local[atoms[k]] = k;
    Nbrs nbrs(size);
    std::vector<Invariant> inv(size);
    bool has_stereo = false;
    for (int k = 0; k < size; ++k) {
        int a = atoms[k];
        const Atom& at = m.atoms[a];
        for (const auto& [j, b] : m.nbrs(a)) {
            nbrs[k].push_back({local[j], m.bonds[b].order});
            if (m.bonds[b].dir && m.bonds[b].a == a) has_stereo = true;
        }
        if (at.chir) has_stereo = true;
        inv[k] = {at.z, (int)m.degree(a), m.hs[a], at.charge, at.iso < 0 ? 0 : at.iso, m.ring_atom[a], at.arom};
    }
    std::vector<int> codes;
    int n_classes = dense_ranks(inv, codes);
    std::vector<int> ranks(codes);
    n_classes = refine(ranks, nbrs, n_classes);
    auto to_order = [&](const std::vector<int>& rk) {
        std::vector<int> order(size);
        for (int k = 0; k < size; ++k) order[rk[k]] = atoms[k];
        return order;
    };
    if (n_classes < size) {
        StereoKey key(m, atoms, local);
        Search search(codes, nbrs, has_stereo ? &key : nullptr);
        search.run(ranks, n_classes);
        ranks = search.best_ranks;
    }
    return writer.write(to_order(ranks));
}

std::optional<std::string> canonical(const std::string& text) {
    Mol m;
    if (!parse(text, m)) return std::nullopt;
    if (check_valid(m) != 1) return std::nullopt;
    Writer writer(m);
    std::vector<std::string> parts;
    for (const auto& atoms : fragments(m)) parts.push_back(label_and_write(m, atoms, writer));
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (size_t k = 0; k < parts.size(); ++k) {
        if (k) out += '.';
        out += parts[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// xxh64 and Morgan identifiers

constexpr uint64_t P1 = 0x9E3779B185EBCA87ULL, P2 = 0xC2B2AE3D27D4EB4FULL, P3 = 0x165667B19E3779F9ULL,
                   P4 = 0x85EBCA77C2B2AE63ULL, P5 = 0x27D4EB2F165667C5ULL;

inline uint64_t rotl(uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }
inline uint64_t round64(uint64_t acc, uint64_t lane) {
    acc += lane * P2;
    acc = rotl(acc, 31);
    return acc * P1;
}
inline uint64_t merge64(uint64_t acc, uint64_t val) {
    acc ^= round64(0, val);
    return acc * P1 + P4;
}

// xxh64 of a sequence of little-endian uint64 words.
uint64_t xxh64_words(const uint64_t* w, size_t count, uint64_t seed) {
    size_t len = count * 8;
    size_t i = 0;
    uint64_t h;
    if (count >= 4) {
        uint64_t v1 = seed + P1 + P2, v2 = seed + P2, v3 = seed, v4 = seed - P1;
        for (; i + 4 <= count; i += 4) {
            v1 = round64(v1, w[i]);
            v2 = round64(v2, w[i + 1]);
            v3 = round64(v3, w[i + 2]);
            v4 = round64(v4, w[i + 3]);
        }
        h = rotl(v1, 1) + rotl(v2, 7) + rotl(v3, 12) + rotl(v4, 18);
        h = merge64(h, v1);
        h = merge64(h, v2);
        h = merge64(h, v3);
        h = merge64(h, v4);
    } else {
        h = seed + P5;
    }
    h += len;
    for (; i < count; ++i) {
        h ^= round64(0, w[i]);
        h = rotl(h, 27) * P1 + P4;
    }
    h ^= h >> 33;
    h *= P2;
    h ^= h >> 29;
    h *= P3;
    h ^= h >> 32;
    return h;
}

std::optional<std::string> morgan(const std::string& text, int radius, int width, uint64_t seed) {
    Mol m;
    if (!parse(text, m)) return std::nullopt;
    if (check_valid(m) != 1) return std::nullopt;
    int n = m.atoms.size();
    std::vector<uint64_t> ids(n);
    for (int i = 0; i < n; ++i) {
        const Atom& a = m.atoms[i];
        uint64_t w[7] = {(uint64_t)(int64_t)a.z,
                         (uint64_t)m.degree(i),
                         (uint64_t)(int64_t)m.hs[i],
                         (uint64_t)(int64_t)a.charge,
                         (uint64_t)(int64_t)(a.iso < 0 ? 0 : a.iso),
                         (uint64_t)m.ring_atom[i],
                         (uint64_t)a.arom};
        ids[i] = xxh64_words(w, 7, seed);
    }
    std::string bits(width / 8, '\0');
    auto set_bit = [&](uint64_t ident) {
        uint64_t b = ident % (uint64_t)width;
        bits[b >> 3] |= (char)(1 << (b & 7));
    };
    for (uint64_t id : ids) set_bit(id);
    int words = (n + 63) / 64;
    std::vector<uint64_t> envs((size_t)n * words, 0), fresh((size_t)n * words);
    for (int i = 0; i < n; ++i) envs[(size_t)i * words + i / 64] |= 1ULL << (i % 64);
    auto env_key = [&](const std::vector<uint64_t>& e, int i) {
        return std::string(reinterpret_cast<const char*>(&e[(size_t)i * words]), words * 8);
    };
    std::unordered_set<std::string> seen;
    for (int i = 0; i < n; ++i) seen.insert(env_key(envs, i));
    std::vector<uint64_t> new_ids(n), flat;
    std::vector<std::pair<uint64_t, uint64_t>> pairs;
    std::vector<int> idx(n);
    for (int r = 1; r <= radius; ++r) {
        for (int i = 0; i < n; ++i) {
            pairs.clear();
            for (const auto& [j, k] : m.nbrs(i)) pairs.push_back({(uint64_t)m.bonds[k].order, ids[j]});
            std::sort(pairs.begin(), pairs.end());
            flat.clear();
            flat.push_back((uint64_t)r);
            flat.push_back(ids[i]);
            for (const auto& pr : pairs) {
                flat.push_back(pr.first);
                flat.push_back(pr.second);
            }
            new_ids[i] = xxh64_words(flat.data(), flat.size(), seed);
            uint64_t* dst = &fresh[(size_t)i * words];
            const uint64_t* src = &envs[(size_t)i * words];
            for (int w = 0; w < words; ++w) dst[w] = src[w];
            for (const auto& [j, k] : m.nbrs(i)) {
                const uint64_t* nb = &envs[(size_t)j * words];
                for (int w = 0; w < words; ++w) dst[w] |= nb[w];
            }
        }
        for (int i = 0; i < n; ++i) idx[i] = i;
        // identical environments keep the smaller identifier
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return new_ids[a] < new_ids[b]; });
        for (int i : idx) {
            if (seen.insert(env_key(fresh, i)).second) set_bit(new_ids[i]);
        }
        ids.swap(new_ids);
        envs.swap(fresh);
    }
    return bits;
}

}  // namespace

PYBIND11_MODULE(_fast, mod) {
    mod.doc() = "Compiled fast path for canonical SMILES and Morgan fingerprints.";
    mod.def(
        "configure",
        [](const std::vector<std::string>& symbols, const std::vector<std::vector<int>>& valences,
           const std::vector<bool>& organic, const std::map<std::pair<int, int>, std::vector<int>>& charged) {
            T.symbols = symbols;
            T.by_symbol.clear();
            for (size_t z = 1; z < symbols.size(); ++z) T.by_symbol[symbols[z]] = z;
            T.valences = valences;
            T.organic = organic;
            T.charged = charged;
            T.ready = true;
        },
        "Install element tables (index = atomic number).");
    mod.def(
        "canonical_smiles",
        [](const std::string& text) -> py::object {
            std::optional<std::string> out;
            {
                py::gil_scoped_release release;
                out = canonical(text);
            }
            if (!out) return py::none();
            return py::str(*out);
        },
        "Canonical SMILES, or None when the reference implementation must decide.");
    mod.def(
        "morgan_bits",
        [](const std::string& text, int radius, int width, uint64_t seed) -> py::object {
            if (width <= 0 || width % 8 || radius < 0) return py::none();
            std::optional<std::string> out;
            {
                py::gil_scoped_release release;
                out = morgan(text, radius, width, seed);
            }
            if (!out) return py::none();
            return py::bytes(*out);
        },
        "Morgan fingerprint bits as little-endian bytes, or None to defer to the reference.");
    mod.def(
        "xxh64_words",
        [](const std::vector<uint64_t>& words, uint64_t seed) { return xxh64_words(words.data(), words.size(), seed); },
        "xxh64 of little-endian uint64 words.");
}
