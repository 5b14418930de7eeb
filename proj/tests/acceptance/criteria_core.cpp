int acceptance_placeholder() { return 0; }
