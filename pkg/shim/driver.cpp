// Fixed driver for the emitted heart-rate unit: loads a one-sample-per-line
// CSV (optional `# fs=<int>` header, else fs from argv), calls the entry
// symbol, and prints the same t_sec,bpm schema the toolkit's hr command
// prints. The emitted unit's path is injected at compile time.
#include "m2cpp.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

struct Algorithm {
    static void EKGpeakDet(mat& sig, int fs, mat& iHR, vec& peak, mat& tHR);
};

#include EMITTED_UNIT

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: hr_driver <signal.csv> [fs]\n");
        return 1;
    }
    std::ifstream in(argv[1]);
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", argv[1]);
        return 1;
    }
    int fs = argc > 2 ? std::atoi(argv[2]) : 0;
    std::vector<double> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::size_t pos = line.find("fs=");
            if (pos != std::string::npos && fs == 0) {
                fs = std::atoi(line.c_str() + pos + 3);
            }
            continue;
        }
        samples.push_back(std::strtod(line.c_str(), nullptr));
    }
    if (fs <= 0) {
        std::fprintf(stderr, "sampling rate unknown: add '# fs=<int>' or pass fs\n");
        return 1;
    }

    mat sig;
    sig.assign_column(std::move(samples));
    mat iHR;
    mat tHR;
    vec peak;
    Algorithm::EKGpeakDet(sig, fs, iHR, peak, tHR);

    std::printf("t_sec,bpm\n");
    const uword rows = tHR.n_rows < iHR.n_rows ? tHR.n_rows : iHR.n_rows;
    for (uword k = 0; k < rows; ++k) {
        std::printf("%.6g,%.6g\n", tHR.data[static_cast<std::size_t>(k)],
                    iHR.data[static_cast<std::size_t>(k)]);
    }
    return 0;
}
