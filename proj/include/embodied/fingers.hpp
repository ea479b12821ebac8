#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace embodied {

// digit -> 16 normalized encoder values, ordered
// [right: thumb(2), index(2), middle(2), ring+pinky duplicated(2); left: same].
struct FingerCodeTable {
    std::array<std::array<double, 16>, 10> codes{};

    const std::array<double, 16>& code(int digit) const { return codes[digit]; }
};

namespace detail {

// One hand is 8 values: thumb x2, index x2, middle x2, ring+pinky motor x2.
// The counting poses of one hand, indexed 0 (fist) to 5 (open).
inline std::array<double, 8> hand_pose(int n) {
    double thumb = 0, index = 0, middle = 0, ringpinky = 0;
    switch (n) {
        case 0: break;
        case 1: index = 1; break;
        case 2: index = 1; middle = 1; break;
        case 3: thumb = 1; index = 1; middle = 1; break;
        case 4: index = 1; middle = 1; ringpinky = 1; break;
        case 5: thumb = 1; index = 1; middle = 1; ringpinky = 1; break;
        default: throw RangeViolation("hand pose " + std::to_string(n));
    }
    return {thumb, thumb, index, index, middle, middle, ringpinky, ringpinky};
}

} // namespace detail

// Binary open/closed approximation of the robot encoder values: digits 1-5 use
// the right hand per one-hand counting, 6-9 add the left hand to a fully open
// right hand, 0 is both fists.
inline FingerCodeTable default_finger_codes() {
    FingerCodeTable t;
    for (int d = 0; d <= 9; ++d) {
        const int right = d == 0 ? 0 : (d <= 5 ? d : 5);
        const int left = d <= 5 ? 0 : d - 5;
        const auto r = detail::hand_pose(right);
        const auto l = detail::hand_pose(left);
        for (int i = 0; i < 8; ++i) {
            t.codes[d][i] = r[i];
            t.codes[d][8 + i] = l[i];
        }
    }
    return t;
}

inline void validate_finger_codes(const FingerCodeTable& t) {
    for (int d = 0; d <= 9; ++d)
        for (double v : t.codes[d])
            if (!(v >= 0.0 && v <= 1.0))
                throw RangeViolation("digit " + std::to_string(d) + " has value outside [0,1]");
    for (int a = 0; a <= 9; ++a)
        for (int b = a + 1; b <= 9; ++b)
            if (t.codes[a] == t.codes[b])
                throw DuplicateCode("digits " + std::to_string(a) + " and " + std::to_string(b) +
                                    " share one code");
}

// Text format: one line per digit — the digit, then 16 comma-separated decimal
// values in [0,1]. '#' lines are comments.
inline FingerCodeTable parse_finger_codes(std::istream& in) {
    FingerCodeTable t;
    std::array<bool, 10> seen{};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 17)
            throw ParseError("line " + std::to_string(lineno) + ": expected digit + 16 values, got " +
                             std::to_string(cells.size() ? cells.size() - 1 : 0) + " values");
        int digit;
        try {
            std::size_t pos;
            digit = std::stoi(cells[0], &pos);
            if (pos != cells[0].find_last_not_of(" \t") + 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(lineno) + ": bad digit field '" + cells[0] + "'");
        }
        if (digit < 0 || digit > 9)
            throw ParseError("line " + std::to_string(lineno) + ": digit " + std::to_string(digit));
        if (seen[digit])
            throw ParseError("line " + std::to_string(lineno) + ": digit " + std::to_string(digit) +
                             " listed twice");
        for (int i = 0; i < 16; ++i) {
            double v;
            try {
                v = std::stod(cells[i + 1]);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ": bad value '" + cells[i + 1] + "'");
            }
            if (!(v >= 0.0 && v <= 1.0))
                throw RangeViolation("line " + std::to_string(lineno) + ": value " + cells[i + 1] +
                                     " outside [0,1]");
            t.codes[digit][i] = v;
        }
        seen[digit] = true;
    }
    for (int d = 0; d <= 9; ++d)
        if (!seen[d]) throw MissingDigit("digit " + std::to_string(d) + " absent from table");
    validate_finger_codes(t);
    return t;
}

inline FingerCodeTable load_finger_codes(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataMissing("cannot open finger-code file " + path);
    return parse_finger_codes(f);
}

inline std::string serialize_finger_codes(const FingerCodeTable& t) {
    std::string out = "# digit, then 16 encoder values in [0,1]\n";
    char buf[32];
    for (int d = 0; d <= 9; ++d) {
        out += std::to_string(d);
        for (double v : t.codes[d]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += ",";
            out += buf;
        }
        out += "\n";
    }
    return out;
}

inline void save_finger_codes(const FingerCodeTable& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataMissing("cannot write finger-code file " + path);
    f << serialize_finger_codes(t);
}

// Content hash recorded in checkpoints so a link is never silently combined
// with a different code table.
inline std::uint64_t finger_code_hash(const FingerCodeTable& t) {
    return fnv1a64(serialize_finger_codes(t));
}

} // namespace embodied
