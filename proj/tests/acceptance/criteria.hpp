#pragma once

#include <string>

namespace acceptance {

struct Context {
  std::string cli;  // pipeline binary; criterion 10 runs it as a subprocess
};

// Each criterion prints its supporting evidence on stdout (indented lines)
// and returns whether it passed.  Tolerances are pinned inside.
bool criterion1(const Context& ctx);
bool criterion2(const Context& ctx);
bool criterion3(const Context& ctx);
bool criterion4(const Context& ctx);
bool criterion5(const Context& ctx);
bool criterion6(const Context& ctx);
bool criterion7(const Context& ctx);
bool criterion8(const Context& ctx);
bool criterion9(const Context& ctx);
bool criterion10(const Context& ctx);

}  // namespace acceptance
