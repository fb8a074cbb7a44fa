#include "aiprobe/xml.hpp"

#include "aiprobe/errors.hpp"

#include <cctype>
#include <sstream>

namespace aiprobe::xml {

namespace {

    bool name_start_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':'; }
    bool name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.';
    }

    class Cursor {
      public:
        explicit Cursor(std::string_view text) : text_(text) {}

        bool eof() const { return pos_ >= text_.size(); }
        char peek() const { return text_[pos_]; }
        int line() const { return line_; }

        char advance() {
            char c = text_[pos_++];
            if (c == '\n') ++line_;
            return c;
        }

        bool starts_with(std::string_view prefix) const { return text_.substr(pos_).substr(0, prefix.size()) == prefix; }

        void expect(char c) {
            if (eof() || peek() != c)
                throw ParseError(std::string("expected '") + c + "'" + (eof() ? " but reached end of input" : ""), line_);
            advance();
        }

        void skip(std::size_t n) {
            for (std::size_t i = 0; i < n && !eof(); ++i) advance();
        }

        void skip_whitespace() {
            while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
        }

      private:
        std::string_view text_;
        std::size_t pos_ = 0;
        int line_ = 1;
    };

    void skip_misc(Cursor& cur) {
        for (;;) {
            cur.skip_whitespace();
            if (cur.starts_with("<!--")) {
                int start = cur.line();
                cur.skip(4);
                while (!cur.starts_with("-->")) {
                    if (cur.eof()) throw ParseError("unterminated comment", start);
                    cur.advance();
                }
                cur.skip(3);
            } else if (cur.starts_with("<?")) {
                int start = cur.line();
                cur.skip(2);
                while (!cur.starts_with("?>")) {
                    if (cur.eof()) throw ParseError("unterminated declaration", start);
                    cur.advance();
                }
                cur.skip(2);
            } else {
                return;
            }
        }
    }

    std::string parse_name(Cursor& cur) {
        if (cur.eof() || !name_start_char(cur.peek())) throw ParseError("expected a name", cur.line());
        std::string name;
        name.push_back(cur.advance());
        while (!cur.eof() && name_char(cur.peek())) name.push_back(cur.advance());
        return name;
    }

    void append_entity(Cursor& cur, std::string& out) {
        int start = cur.line();
        cur.expect('&');
        std::string entity;
        while (!cur.eof() && cur.peek() != ';') {
            entity.push_back(cur.advance());
            if (entity.size() > 8) break;
        }
        if (cur.eof() || cur.peek() != ';') throw ParseError("unterminated entity reference", start);
        cur.advance();
        if (entity == "amp") out += '&';
        else if (entity == "lt") out += '<';
        else if (entity == "gt") out += '>';
        else if (entity == "quot") out += '"';
        else if (entity == "apos") out += '\'';
        else if (!entity.empty() && entity[0] == '#') {
            int base = 10;
            std::string digits = entity.substr(1);
            if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
                base = 16;
                digits = digits.substr(1);
            }
            std::size_t used = 0;
            unsigned long code = 0;
            try {
                code = std::stoul(digits, &used, base);
            } catch (const std::exception&) {
                throw ParseError("bad character reference '&" + entity + ";'", start);
            }
            if (used != digits.size() || code == 0 || code > 0x10FFFF)
                throw ParseError("bad character reference '&" + entity + ";'", start);
            // UTF-8 encode.
            if (code < 0x80) out += static_cast<char>(code);
            else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else if (code < 0x10000) {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else {
                out += static_cast<char>(0xF0 | (code >> 18));
                out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
        } else {
            throw ParseError("unknown entity '&" + entity + ";'", start);
        }
    }

    std::string parse_attribute_value(Cursor& cur) {
        if (cur.eof() || (cur.peek() != '"' && cur.peek() != '\''))
            throw ParseError("expected a quoted attribute value", cur.line());
        char quote = cur.advance();
        std::string value;
        while (!cur.eof() && cur.peek() != quote) {
            if (cur.peek() == '&') append_entity(cur, value);
            else if (cur.peek() == '<') throw ParseError("'<' is not allowed inside an attribute value", cur.line());
            else value.push_back(cur.advance());
        }
        if (cur.eof()) throw ParseError("unterminated attribute value", cur.line());
        cur.advance();
        return value;
    }

    Element parse_element(Cursor& cur) {
        Element elem;
        elem.line = cur.line();
        cur.expect('<');
        elem.name = parse_name(cur);
        for (;;) {
            cur.skip_whitespace();
            if (cur.eof()) throw ParseError("unterminated tag <" + elem.name + ">", elem.line);
            if (cur.peek() == '/') {
                cur.advance();
                cur.expect('>');
                return elem; // self-closing
            }
            if (cur.peek() == '>') {
                cur.advance();
                break;
            }
            std::string key = parse_name(cur);
            for (const auto& [existing, _] : elem.attributes)
                if (existing == key)
                    throw ParseError("duplicate attribute '" + key + "' on <" + elem.name + ">", cur.line());
            cur.skip_whitespace();
            cur.expect('=');
            cur.skip_whitespace();
            elem.attributes.emplace_back(std::move(key), parse_attribute_value(cur));
        }
        // Content: child elements, comments, and whitespace only.
        for (;;) {
            if (cur.eof()) throw ParseError("missing closing tag for <" + elem.name + ">", elem.line);
            if (cur.starts_with("<!--") ) {
                skip_misc(cur);
                continue;
            }
            if (cur.peek() == '<') {
                if (cur.starts_with("</")) {
                    int close_line = cur.line();
                    cur.skip(2);
                    std::string closing = parse_name(cur);
                    if (closing != elem.name)
                        throw ParseError("mismatched closing tag </" + closing + "> for <" + elem.name + ">", close_line);
                    cur.skip_whitespace();
                    cur.expect('>');
                    return elem;
                }
                elem.children.push_back(parse_element(cur));
            } else if (std::isspace(static_cast<unsigned char>(cur.peek()))) {
                cur.advance();
            } else {
                throw ParseError("unexpected text content inside <" + elem.name + ">", cur.line());
            }
        }
    }

    void serialize_into(const Element& elem, std::string& out, int depth) {
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        out += '<';
        out += elem.name;
        for (const auto& [key, value] : elem.attributes) {
            out += ' ';
            out += key;
            out += "=\"";
            out += escape_attribute(value);
            out += '"';
        }
        if (elem.children.empty()) {
            out += "/>\n";
            return;
        }
        out += ">\n";
        for (const Element& child : elem.children) serialize_into(child, out, depth + 1);
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        out += "</";
        out += elem.name;
        out += ">\n";
    }

} // namespace

const std::string* Element::find_attribute(std::string_view key) const {
    for (const auto& [name, value] : attributes)
        if (name == key) return &value;
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view name) const {
    std::vector<const Element*> out;
    for (const Element& child : children)
        if (child.name == name) out.push_back(&child);
    return out;
}

const Element* Element::first_child(std::string_view name) const {
    for (const Element& child : children)
        if (child.name == name) return &child;
    return nullptr;
}

Element parse(std::string_view text) {
    Cursor cur(text);
    skip_misc(cur);
    if (cur.eof()) throw ParseError("empty document", cur.line());
    if (cur.peek() != '<') throw ParseError("expected an element", cur.line());
    Element root = parse_element(cur);
    skip_misc(cur);
    if (!cur.eof()) throw ParseError("trailing content after the root element", cur.line());
    return root;
}

std::string serialize(const Element& root) {
    std::string out;
    serialize_into(root, out, 0);
    return out;
}

std::string escape_attribute(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace aiprobe::xml
