#pragma once

#include <string_view>

namespace tdgtype {

std::string_view default_stub_text();

}  // namespace tdgtype
