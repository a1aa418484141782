// One line per criterion. Usage: acceptance [--criterion N]... [--check NAME]...
#include <iostream>
#include <string>
#include <vector>

#include "agestruct/acceptance.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    std::vector<std::string> only;
    for (int k = 1; k < argc; ++k) {
        const std::string arg = argv[k];
        if ((arg == "--criterion" || arg == "--check") && k + 1 < argc) {
            const std::string value = argv[++k];
            if (arg == "--check") only.push_back(value);
            else ids.push_back(std::stoi(value));
        } else {
            std::cerr << "usage: acceptance [--criterion N]... [--check NAME]...\n";
            return 2;
        }
    }
    if (ids.empty()) ids = agestruct::acceptance::criteria();
    bool pass = true;
    for (int id : ids) {
        const auto r = agestruct::acceptance::run(id, only);
        std::cout << agestruct::acceptance::format_line(r) << std::endl;
        pass = pass && r.pass();
    }
    return pass ? 0 : 1;
}
