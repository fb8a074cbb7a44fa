#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aiprobe::xml {

// Minimal XML document model covering the configuration-template dialect:
// elements, attributes, comments, an optional declaration, and the five
// predefined entities plus numeric character references. Text content other
// than whitespace is rejected (all data lives in attributes).
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes; // document order
    std::vector<Element> children;
    int line = 0; // 1-based line of the opening tag

    const std::string* find_attribute(std::string_view key) const;
    std::vector<const Element*> children_named(std::string_view name) const;
    const Element* first_child(std::string_view name) const;
};

// Parses a full document and returns its root element. Throws ParseError
// (with line numbers) on malformed input.
Element parse(std::string_view text);

// Serializes with stable two-space indentation; childless elements
// self-close. parse(serialize(e)) reproduces e exactly.
std::string serialize(const Element& root);

std::string escape_attribute(std::string_view raw);

} // namespace aiprobe::xml
