public class S01 { void f() { char c = 'ab'; } }
