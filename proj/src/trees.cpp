#include "vcpcfg/trees.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vcpcfg {

namespace {

struct Lexer {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return s[pos];
  }
  std::string atom() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '(' &&
           s[pos] != ')')
      ++pos;
    if (start == pos)
      throw DataError("expected atom at column " + std::to_string(start + 1));
    return s.substr(start, pos - start);
  }
};

struct Reader {
  Lexer lex;
  int next_token = 0;
  std::map<std::pair<int, int>, std::string> spans;
  std::set<std::pair<int, int>> phrasal;  // spans owned by a non-POS node
  std::vector<std::string> tokens;

  void node() {
    if (lex.peek() != '(') throw DataError("expected '('");
    ++lex.pos;
    const std::string label = lex.atom();
    const int start = next_token;
    bool has_subtree_child = false;
    int children = 0;
    while (true) {
      if (lex.eof()) throw DataError("unbalanced brackets: missing ')'");
      if (lex.peek() == ')') {
        ++lex.pos;
        break;
      }
      if (lex.peek() == '(') {
        node();
        has_subtree_child = true;
      } else {
        tokens.push_back(lex.atom());
        ++next_token;
      }
      ++children;
    }
    if (children == 0) throw DataError("empty constituent (" + label + ")");
    const int end = next_token;
    const bool is_pos = !has_subtree_child && end - start == 1;
    if (!is_pos) {
      spans[{start, end}] = label;  // topmost label of a unary chain wins
      phrasal.insert({start, end});
    }
  }
};

}  // namespace

ParseTree parse_bracketed(const std::string& line) {
  Reader rd{Lexer{line}};
  if (rd.lex.eof()) throw DataError("empty tree line");
  rd.node();
  if (!rd.lex.eof()) throw DataError("trailing content after tree");
  ParseTree t;
  t.n = rd.next_token;
  for (const auto& [span, label] : rd.spans)
    t.spans.push_back({span.first, span.second, label});
  return t;
}

std::vector<std::string> tree_tokens(const std::string& line) {
  Reader rd{Lexer{line}};
  if (rd.lex.eof()) throw DataError("empty tree line");
  rd.node();
  return rd.tokens;
}

std::vector<ParseTree> load_trees(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tree file: " + path);
  std::vector<ParseTree> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_bracketed(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string serialize_tree(const ParseTree& tree,
                           const std::vector<std::string>& tokens) {
  require(static_cast<int>(tokens.size()) == tree.n,
          "serialize_tree: token count mismatch");
  std::map<std::pair<int, int>, std::string> label;
  for (const auto& sp : tree.spans)
    if (sp.end - sp.start >= 2) label[{sp.start, sp.end}] = sp.label;

  std::function<void(std::ostringstream&, int, int)> emit =
      [&](std::ostringstream& os, int i, int j) {
        auto it = label.find({i, j});
        const std::string lbl = it != label.end() ? it->second : "X";
        os << "(" << lbl;
        int k = i;
        while (k < j) {
          // widest recorded span starting at k, strictly inside (i,j)
          int best_end = -1;
          for (auto sit = label.lower_bound({k, 0});
               sit != label.end() && sit->first.first == k; ++sit) {
            const int e = sit->first.second;
            if (e <= j && !(k == i && e == j)) best_end = std::max(best_end, e);
          }
          if (best_end > k) {
            os << " ";
            emit(os, k, best_end);
            k = best_end;
          } else {
            os << " " << tokens[k];
            ++k;
          }
        }
        os << ")";
      };

  std::ostringstream os;
  emit(os, 0, tree.n);
  return os.str();
}

}  // namespace vcpcfg
