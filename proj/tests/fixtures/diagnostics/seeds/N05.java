public class N { void f() { String s = StringUtils.capitalize("a"); } }
