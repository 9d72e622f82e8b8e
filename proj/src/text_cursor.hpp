#pragma once

#include "soplog/error.hpp"

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

namespace soplog::detail {

// Character cursor with 1-based line/column tracking, shared by the small
// line-oriented file formats (structures, vocabularies, witnesses, machines).
class TextCursor {
public:
    explicit TextCursor(std::string_view text, bool newline_is_space = true)
        : text_(text), newline_is_space_(newline_is_space) {}

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    int line() const { return line_; }
    int column() const { return col_; }

    char get() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    // Skips blanks and `#` comments. Newlines are skipped only when they count as space.
    void skip_space() {
        while (!at_end()) {
            char c = peek();
            if (c == '#') {
                while (!at_end() && peek() != '\n') get();
            } else if (c == '\n') {
                if (!newline_is_space_) return;
                get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                return;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    bool accept(char c) {
        skip_space();
        if (peek() == c) {
            get();
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_space();
        if (peek() != c) fail(std::string("expected '") + c + "'" + found());
        get();
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    bool peek_ident() {
        skip_space();
        return ident_start(peek());
    }

    std::string ident(const char* what = "identifier") {
        skip_space();
        if (!ident_start(peek())) fail(std::string("expected ") + what + found());
        std::string out;
        while (!at_end() && ident_char(peek())) out.push_back(get());
        return out;
    }

    bool peek_number() {
        skip_space();
        return std::isdigit(static_cast<unsigned char>(peek())) != 0;
    }

    std::uint64_t number(const char* what = "number") {
        skip_space();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail(std::string("expected ") + what + found());
        std::uint64_t v = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            int d = get() - '0';
            if (v > (UINT64_MAX - d) / 10) fail("number too large");
            v = v * 10 + d;
        }
        return v;
    }

    std::string found() const {
        if (at_end()) return ", found end of input";
        char c = peek();
        if (c == '\n') return ", found end of line";
        return std::string(", found '") + c + "'";
    }

private:
    std::string_view text_;
    bool newline_is_space_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

} // namespace soplog::detail
