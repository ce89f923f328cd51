#include "cfdta/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <vector>

#include "cfdta/error.hpp"

namespace cfdta {

namespace {

// Pending bond state between two atom tokens. kDefault resolves to aromatic
// when both endpoints are aromatic, single otherwise; an explicit '-' forces
// single regardless.
enum class PendingBond { none, single, double_, triple };

BondKind resolve_bond(PendingBond p, bool u_aromatic, bool v_aromatic) {
  switch (p) {
    case PendingBond::none:
      return (u_aromatic && v_aromatic) ? BondKind::aromatic : BondKind::single;
    case PendingBond::single: return BondKind::single;
    case PendingBond::double_: return BondKind::double_;
    case PendingBond::triple: return BondKind::triple;
  }
  throw RuntimeError("resolve_bond: bad pending state");
}

struct RingSlot {
  int atom = -1;
  PendingBond bond = PendingBond::none;
  std::size_t offset = 0;
};

struct Parser {
  std::string_view s;  // set by parse_smiles before run()
  std::size_t pos = 0;

  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  int prev = -1;
  PendingBond pending = PendingBond::none;
  std::size_t pending_offset = 0;
  std::vector<int> branch_stack;
  std::map<int, RingSlot> rings;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  char peek() const { return pos < s.size() ? s[pos] : '\0'; }

  void add_atom(Element e, bool aromatic) {
    int cur = int(atoms.size());
    atoms.push_back({e, aromatic});
    if (prev >= 0) {
      BondKind k = resolve_bond(pending, atoms[std::size_t(prev)].aromatic, aromatic);
      bonds.push_back({prev, cur, k});
    } else if (pending != PendingBond::none) {
      fail("bond symbol before the first atom", pending_offset);
    }
    pending = PendingBond::none;
    prev = cur;
  }

  void open_or_close_ring(int digit, std::size_t at) {
    if (prev < 0) fail("ring closure before any atom", at);
    auto it = rings.find(digit);
    if (it == rings.end()) {
      rings[digit] = {prev, pending, at};
      pending = PendingBond::none;
      return;
    }
    RingSlot slot = it->second;
    rings.erase(it);
    if (slot.atom == prev) fail("ring closure bonds an atom to itself", at);
    PendingBond agreed = PendingBond::none;
    if (slot.bond == PendingBond::none) {
      agreed = pending;
    } else if (pending == PendingBond::none || pending == slot.bond) {
      agreed = slot.bond;
    } else {
      fail("ring closure bond symbols disagree", at);
    }
    BondKind k = resolve_bond(agreed, atoms[std::size_t(slot.atom)].aromatic,
                              atoms[std::size_t(prev)].aromatic);
    bonds.push_back({slot.atom, prev, k});
    pending = PendingBond::none;
  }

  // [element(H count)(charge)]; the H count and charge are validated and
  // discarded (see header).
  void parse_bracket() {
    std::size_t start = pos;
    ++pos;  // '['
    if (pos >= s.size()) fail("unterminated bracket atom", start);

    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      fail("isotope labels are not supported", pos);
    }

    Element elem;
    bool aromatic = false;
    char c = peek();
    if (c == '*') fail("wildcard atoms are not supported", pos);
    if (std::islower(static_cast<unsigned char>(c))) {
      static constexpr std::string_view kAromaticOk = "bcnops";
      if (kAromaticOk.find(c) == std::string_view::npos) {
        fail("unknown aromatic element in bracket", pos);
      }
      char up = char(std::toupper(static_cast<unsigned char>(c)));
      elem = *element_from_symbol(std::string_view(&up, 1));
      aromatic = true;
      ++pos;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::size_t len = 1;
      if (pos + 1 < s.size() && std::islower(static_cast<unsigned char>(s[pos + 1])) &&
          element_from_symbol(s.substr(pos, 2))) {
        len = 2;
      }
      auto e = element_from_symbol(s.substr(pos, len));
      if (!e) {
        if (c == 'H') fail("explicit hydrogen atoms are not supported", pos);
        fail("unknown element in bracket", pos);
      }
      elem = *e;
      pos += len;
    } else {
      fail("expected an element symbol in bracket", pos);
    }

    if (peek() == 'H') {
      ++pos;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos;
    }
    if (peek() == '+' || peek() == '-') {
      char sign = peek();
      std::size_t charge_at = pos;
      ++pos;
      int magnitude = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = peek() - '0';
        ++pos;
        if (std::isdigit(static_cast<unsigned char>(peek()))) magnitude = 10;
      } else {
        while (peek() == sign) {
          ++magnitude;
          ++pos;
        }
      }
      if (magnitude > 2) fail("charge outside [-2,+2]", charge_at);
    }
    if (peek() == '@') fail("stereochemistry is not supported", pos);
    if (peek() != ']') fail("unterminated bracket atom", pos);
    ++pos;
    add_atom(elem, aromatic);
  }

  MolGraph run() {
    if (s.empty()) fail("empty input", 0);
    while (pos < s.size()) {
      char c = s[pos];
      std::size_t at = pos;
      switch (c) {
        case '-':
        case '=':
        case '#':
          if (pending != PendingBond::none) fail("repeated bond symbol", at);
          pending = c == '-'   ? PendingBond::single
                    : c == '=' ? PendingBond::double_
                               : PendingBond::triple;
          pending_offset = at;
          ++pos;
          break;
        case '(':
          if (prev < 0) fail("branch before any atom", at);
          if (pending != PendingBond::none) fail("bond symbol before '('", at);
          branch_stack.push_back(prev);
          ++pos;
          break;
        case ')':
          if (branch_stack.empty()) fail("unmatched ')'", at);
          if (pending != PendingBond::none) fail("dangling bond symbol before ')'", at);
          prev = branch_stack.back();
          branch_stack.pop_back();
          ++pos;
          break;
        case '%': {
          if (pos + 2 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos + 1])) ||
              !std::isdigit(static_cast<unsigned char>(s[pos + 2]))) {
            fail("'%' ring closure needs two digits", at);
          }
          int digit = (s[pos + 1] - '0') * 10 + (s[pos + 2] - '0');
          pos += 3;
          open_or_close_ring(digit, at);
          break;
        }
        case '[': parse_bracket(); break;
        case '.': fail("multi-fragment input is not supported", at);
        case '/': case '\\': fail("stereochemistry is not supported", at);
        case '@': fail("stereochemistry is not supported", at);
        case '*': fail("wildcard atoms are not supported", at);
        case ':': fail("':' bonds are not supported", at);
        default:
          if (std::isdigit(static_cast<unsigned char>(c))) {
            ++pos;
            open_or_close_ring(c - '0', at);
            break;
          }
          if (std::islower(static_cast<unsigned char>(c))) {
            static constexpr std::string_view kAromaticOk = "bcnops";
            if (kAromaticOk.find(c) == std::string_view::npos) {
              fail("unexpected character", at);
            }
            char up = char(std::toupper(static_cast<unsigned char>(c)));
            add_atom(*element_from_symbol(std::string_view(&up, 1)), true);
            ++pos;
            break;
          }
          if (std::isupper(static_cast<unsigned char>(c))) {
            std::size_t len = 1;
            if (pos + 1 < s.size() &&
                std::islower(static_cast<unsigned char>(s[pos + 1])) &&
                element_from_symbol(s.substr(pos, 2))) {
              len = 2;
            }
            auto e = element_from_symbol(s.substr(pos, len));
            if (!e) {
              if (c == 'H') fail("explicit hydrogen atoms are not supported", at);
              fail("unknown element", at);
            }
            pos += len;
            add_atom(*e, false);
            break;
          }
          fail("unexpected character", at);
      }
    }

    if (!branch_stack.empty()) fail("unmatched '('", s.size());
    if (pending != PendingBond::none) fail("dangling bond symbol", pending_offset);
    if (!rings.empty()) {
      fail("unclosed ring bond " + std::to_string(rings.begin()->first),
           rings.begin()->second.offset);
    }

    try {
      return MolGraph(std::move(atoms), std::move(bonds));
    } catch (const DataError& e) {
      throw ParseError(e.what(), 0);
    }
  }
};

}  // namespace

MolGraph parse_smiles(std::string_view s) {
  Parser p;
  p.s = s;
  return p.run();
}

namespace {

// Two passes over one traversal order. The plan pass classifies every bond
// as tree or back edge; back-edge digits must already be known when the
// first endpoint is printed, so classification cannot happen during
// emission. The emit pass then prints tokens and manages digit reuse in
// output order (a digit is live from its opening token to its closing one).
struct Writer {
  const MolGraph& g;
  std::vector<int> rank;

  std::vector<char> visited;
  std::vector<char> bond_seen;
  std::vector<std::vector<int>> tree_children;  // atom -> bond indices, in order
  std::vector<std::vector<int>> opens_at;       // first-visited endpoint -> back-edge bonds
  std::vector<std::vector<int>> closes_at;      // second-visited endpoint -> back-edge bonds

  std::vector<int> digit_of;  // per bond, assigned while emitting
  std::vector<char> digit_used = std::vector<char>(100, 0);
  std::string out;

  explicit Writer(const MolGraph& graph)
      : g(graph),
        rank(canonical_order(graph)),
        visited(std::size_t(graph.atom_count()), 0),
        bond_seen(graph.bonds().size(), 0),
        tree_children(std::size_t(graph.atom_count())),
        opens_at(std::size_t(graph.atom_count())),
        closes_at(std::size_t(graph.atom_count())),
        digit_of(graph.bonds().size(), -1) {}

  std::vector<int> ordered_bonds(int a) const {
    std::vector<int> bs;
    for (int bi : g.incident_bonds(a)) {
      if (!bond_seen[std::size_t(bi)]) bs.push_back(bi);
    }
    std::sort(bs.begin(), bs.end(), [&](int x, int y) {
      const Bond& bx = g.bonds()[std::size_t(x)];
      const Bond& by = g.bonds()[std::size_t(y)];
      int nx = (bx.u == a) ? bx.v : bx.u;
      int ny = (by.u == a) ? by.v : by.u;
      return rank[std::size_t(nx)] < rank[std::size_t(ny)];
    });
    return bs;
  }

  void plan(int a) {
    visited[std::size_t(a)] = 1;
    for (int bi : ordered_bonds(a)) {
      if (bond_seen[std::size_t(bi)]) continue;
      const Bond& b = g.bonds()[std::size_t(bi)];
      int other = (b.u == a) ? b.v : b.u;
      bond_seen[std::size_t(bi)] = 1;
      if (visited[std::size_t(other)]) {
        opens_at[std::size_t(other)].push_back(bi);
        closes_at[std::size_t(a)].push_back(bi);
      } else {
        tree_children[std::size_t(a)].push_back(bi);
        plan(other);
      }
    }
  }

  std::string bond_symbol(const Bond& b) const {
    switch (b.kind) {
      case BondKind::aromatic: return "";
      case BondKind::single:
        // Implicit between aromatic atoms would re-read as aromatic.
        return (g.atom(b.u).aromatic && g.atom(b.v).aromatic) ? "-" : "";
      case BondKind::double_: return "=";
      case BondKind::triple: return "#";
    }
    return "";
  }

  int claim_digit() {
    for (int d = 1; d < 100; ++d) {
      if (!digit_used[std::size_t(d)]) {
        digit_used[std::size_t(d)] = 1;
        return d;
      }
    }
    throw RuntimeError("write_smiles: more than 99 simultaneous ring bonds");
  }

  void emit_digit(int d) {
    if (d < 10) {
      out += char('0' + d);
    } else {
      out += '%';
      out += char('0' + d / 10);
      out += char('0' + d % 10);
    }
  }

  void emit(int a) {
    const Atom& at = g.atom(a);
    std::string sym(element_symbol(at.element));
    if (at.aromatic) {
      for (char& c : sym) c = char(std::tolower(static_cast<unsigned char>(c)));
    }
    out += sym;

    for (int bi : closes_at[std::size_t(a)]) {
      emit_digit(digit_of[std::size_t(bi)]);
      digit_used[std::size_t(digit_of[std::size_t(bi)])] = 0;
    }
    for (int bi : opens_at[std::size_t(a)]) {
      int d = claim_digit();
      digit_of[std::size_t(bi)] = d;
      out += bond_symbol(g.bonds()[std::size_t(bi)]);
      emit_digit(d);
    }

    const std::vector<int>& kids = tree_children[std::size_t(a)];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const Bond& b = g.bonds()[std::size_t(kids[k])];
      int child = (b.u == a) ? b.v : b.u;
      bool last = (k + 1 == kids.size());
      if (!last) out += '(';
      out += bond_symbol(b);
      emit(child);
      if (!last) out += ')';
    }
  }
};

}  // namespace

std::string write_smiles(const MolGraph& g) {
  Writer w(g);
  int start = 0;
  for (int i = 1; i < g.atom_count(); ++i) {
    if (w.rank[std::size_t(i)] < w.rank[std::size_t(start)]) start = i;
  }
  w.plan(start);
  w.emit(start);
  return w.out;
}

}  // namespace cfdta
