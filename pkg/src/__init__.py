# Prior Conflict Checker
