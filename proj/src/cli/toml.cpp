#include "facecloak/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "facecloak/error.hpp"

namespace facecloak {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(int line, const std::string& message) {
    raise(ErrorKind::ConfigInvalid, "cli",
          "TOML parse error at line " + std::to_string(line) + ": " + message);
}

std::string strip(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

ordered_json parse_scalar(const std::string& raw, int line) {
    const std::string token = strip(raw);
    if (token.empty()) fail(line, "empty value");
    if (token.front() == '"') {
        if (token.size() < 2 || token.back() != '"') fail(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < token.size(); ++i) {
            if (token[i] == '\\' && i + 2 < token.size()) {
                ++i;
                switch (token[i]) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(line, "unsupported escape sequence");
                }
            } else {
                out.push_back(token[i]);
            }
        }
        return out;
    }
    if (token == "true") return true;
    if (token == "false") return false;
    // Number: integer unless it carries a decimal point or exponent.
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t consumed = 0;
        if (is_float) {
            const double v = std::stod(token, &consumed);
            if (consumed != token.size()) fail(line, "trailing characters after number");
            return v;
        }
        const long long v = std::stoll(token, &consumed);
        if (consumed != token.size()) fail(line, "trailing characters after number");
        return v;
    } catch (const std::exception&) {
        fail(line, "cannot parse value '" + token + "'");
    }
}

ordered_json parse_value(const std::string& raw, int line) {
    const std::string token = strip(raw);
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']') fail(line, "unterminated array");
        ordered_json array = ordered_json::array();
        std::string inner = token.substr(1, token.size() - 2);
        std::string current;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!strip(current).empty()) array.push_back(parse_scalar(current, line));
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        if (!strip(current).empty()) array.push_back(parse_scalar(current, line));
        return array;
    }
    return parse_scalar(raw, line);
}

}  // namespace

nlohmann::ordered_json parse_toml(const std::string& text) {
    ordered_json root = ordered_json::object();
    ordered_json* current = &root;

    std::istringstream stream(text);
    std::string raw_line;
    int line_no = 0;
    while (std::getline(stream, raw_line)) {
        ++line_no;
        const std::string line = strip(strip_comment(raw_line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            const std::string name = strip(line.substr(1, line.size() - 2));
            if (name.empty()) fail(line_no, "empty section name");
            current = &root;
            std::size_t start = 0;
            while (start <= name.size()) {
                const std::size_t dot = name.find('.', start);
                const std::string part =
                    strip(name.substr(start, dot == std::string::npos ? dot : dot - start));
                if (part.empty()) fail(line_no, "empty section component");
                current = &(*current)[part];
                if (!current->is_object() && !current->is_null()) {
                    fail(line_no, "section '" + part + "' collides with a value");
                }
                if (current->is_null()) *current = ordered_json::object();
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = strip(line.substr(0, eq));
        if (key.empty()) fail(line_no, "empty key");
        for (char c : key) {
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
                fail(line_no, "unsupported key character in '" + key + "'");
            }
        }
        if (current->contains(key)) fail(line_no, "duplicate key '" + key + "'");
        (*current)[key] = parse_value(line.substr(eq + 1), line_no);
    }
    return root;
}

nlohmann::ordered_json parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorKind::ConfigInvalid, "cli", "cannot open config file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_toml(buffer.str());
}

}  // namespace facecloak
