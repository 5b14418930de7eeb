int acceptance_placeholder2() { return 0; }
