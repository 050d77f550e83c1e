#pragma once

#include <string>
#include <vector>

#include "pathnewton/instance.hpp"
#include "pathnewton/newton.hpp"

namespace pathnewton {

// Parse failure with the offending position. Lines and columns are 1-based;
// column 0 marks errors that concern the document as a whole.
class ParseError : public std::runtime_error {
public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) +
                           (column > 0 ? ", column " + std::to_string(column) : "") +
                           ": " + what),
        line(line), column(column) {}

  int line;
  int column;
};

// Instance document layout (strict; one record per line, `#` comments):
//
//   pathnet-instance v1
//   paths <P>
//   path <id> <name> <CostKind> [key=value ...] [lb=0]
//   block <name>
//   arc <id> <name> <CostKind> [key=value ...]
//   entry <arc-id> <path-id> <weight>
//   constraint <path>:<coeff> [<path>:<coeff> ...] rhs <value>
//   end
//
// Ids are sequential from 0 within their scope. Cost parameters are the
// factory arguments by name: Quadratic q,t,l; PowerMonomial c,k;
// KleinrockDelay cap; NegPartPenalty c; Zero takes none. `lb=0` restricts a
// path flow to be nonnegative. The parsed instance is validated and its
// entries put in canonical (arc, path) order before it is returned.
NetworkInstance parse_instance(const std::string& text);

// Canonical single-token-name serialization; parse_instance(serialize_instance(x))
// is semantically equal to x and a second serialization is byte-identical.
std::string serialize_instance(const NetworkInstance& instance);

// Whitespace-separated reals, `#` comments allowed.
std::vector<double> parse_vector(const std::string& text);

// Trace CSV: header plus one row per TraceRow, reals at 17 significant digits.
std::string format_trace(const std::vector<TraceRow>& rows);

// Thin file wrappers; errors mention the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
NetworkInstance load_instance(const std::string& path);

} // namespace pathnewton
