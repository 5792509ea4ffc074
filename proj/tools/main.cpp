#include "hdee/lp.hpp"
int main() { return 0; }
