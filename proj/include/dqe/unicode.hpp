#pragma once

#include <string>
#include <string_view>

namespace dqe {

// Canonical composition (NFC). Input that is not valid UTF-8 is returned
// unchanged; normalization is only defined over well-formed text.
std::string nfc(std::string_view text);

// Strips leading/trailing Unicode whitespace (ASCII space/tab/newlines,
// NBSP, the general-punctuation spaces, ideographic space).
std::string trim_whitespace(std::string_view text);

bool is_blank(std::string_view text);

}  // namespace dqe
